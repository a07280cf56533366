#include "vmi/core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <span>

#include "vmi/error.hpp"
#include "vmi/random.hpp"

namespace vmi::core {

void SynthSpec::validate() const
{
    if (n_trials_per_class == 0) {
        throw RangeError("n_trials_per_class must be positive");
    }
    if (!(coupling > 0.0 && coupling <= 1.0)) {
        throw RangeError("coupling must lie in (0, 1]");
    }
    if (fs != 1000 && fs != 250) {
        throw RangeError("fs must be 1000 or 250");
    }
    if (onset_ms < 0.0 || onset_ms >= TrialTimeline::imagery_ms) {
        throw RangeError("onset_ms must lie inside the imagery phase");
    }
    for (int c = 0; c < kNumClasses; ++c) {
        if (carrier_hz[c] < 0.5 || carrier_hz[c] > 13.0) {
            throw RangeError("carrier frequency outside [0.5, 13] Hz");
        }
        for (std::size_t ch : planted_channels[c]) {
            if (ch >= montage.size()) {
                throw RangeError("planted channel index " + std::to_string(ch) + " outside montage");
            }
        }
    }
}

std::vector<std::size_t> SynthSpec::planted_union() const
{
    std::set<std::size_t> all;
    for (const auto& set : planted_channels) {
        all.insert(set.begin(), set.end());
    }
    return {all.begin(), all.end()};
}

namespace {

// Kellet's refined pink-noise filter, scaled afterwards to unit variance.
void pink_noise(std::mt19937_64& rng, std::span<double> out)
{
    std::normal_distribution<double> normal;
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
    for (double& v : out) {
        const double w = normal(rng);
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
        b6 = w * 0.115926;
    }
    double mean = 0.0;
    for (double v : out) {
        mean += v;
    }
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (double v : out) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(out.size());
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    for (double& v : out) {
        v = (v - mean) * scale;
    }
}

}  // namespace

EegRecording synth_dataset(const SynthSpec& spec)
{
    spec.validate();
    const int fs = spec.fs;
    const std::size_t n_channels = spec.montage.size();
    const std::size_t trial_len = static_cast<std::size_t>(TrialTimeline::total_ms) * fs / 1000;
    const std::size_t n_trials = spec.n_trials_per_class * kNumClasses;
    const std::size_t n_samples = n_trials * trial_len;

    std::vector<int> order;
    for (int c = 0; c < kNumClasses; ++c) {
        order.insert(order.end(), spec.n_trials_per_class, c);
    }
    auto order_rng = make_rng(spec.seed, "synth-order");
    std::shuffle(order.begin(), order.end(), order_rng);

    std::vector<Event> events;
    events.reserve(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t) {
        events.push_back({t * trial_len, order[t]});
    }

    const double signal_power = 0.5 * spec.signal_uv * spec.signal_uv;
    const double noise_sd = std::isinf(spec.snr_db) && spec.snr_db > 0
                                ? 0.0
                                : std::sqrt(signal_power / std::pow(10.0, spec.snr_db / 10.0));

    SignalMatrix data = SignalMatrix::Zero(static_cast<Eigen::Index>(n_channels), static_cast<Eigen::Index>(n_samples));
    std::vector<double> row(n_samples);
    std::vector<double> pink(n_samples);
    for (std::size_t ch = 0; ch < n_channels; ++ch) {
        std::fill(row.begin(), row.end(), 0.0);
        if (noise_sd > 0.0) {
            auto rng = make_rng(spec.seed, "synth-noise", ch);
            pink_noise(rng, pink);
            std::normal_distribution<double> normal;
            const double k = noise_sd / std::numbers::sqrt2;
            for (std::size_t i = 0; i < n_samples; ++i) {
                row[i] = k * (pink[i] + normal(rng));
            }
        }
        for (std::size_t i = 0; i < n_samples; ++i) {
            data(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) = static_cast<float>(row[i]);
        }
    }

    const std::size_t onset = static_cast<std::size_t>(TrialTimeline::imagery_onset_ms) * fs / 1000 +
                              static_cast<std::size_t>(std::llround(spec.onset_ms * fs / 1000.0));
    const std::size_t imagery_end = trial_len;
    const double jitter_sd = std::sqrt(-std::log(spec.coupling));
    // Jitter correlation time 200 ms.
    const double rho = std::exp(-1.0 / (0.2 * fs));
    const double innov = std::sqrt(1.0 - rho * rho);

    std::vector<double> jitter(imagery_end - onset);
    for (std::size_t t = 0; t < n_trials; ++t) {
        const int cls = order[t];
        auto phase_rng = make_rng(spec.seed, "synth-phase", t);
        const double phi0 = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(phase_rng);
        const double omega = 2.0 * std::numbers::pi * spec.carrier_hz[cls] / fs;
        for (std::size_t ch : spec.planted_channels[cls]) {
            std::fill(jitter.begin(), jitter.end(), 0.0);
            if (jitter_sd > 0.0) {
                auto jrng = make_rng(spec.seed, "synth-jitter", t * n_channels + ch);
                std::normal_distribution<double> normal;
                double d = jitter_sd * normal(jrng);
                for (double& j : jitter) {
                    j = d;
                    d = rho * d + innov * jitter_sd * normal(jrng);
                }
            }
            const std::size_t base = t * trial_len;
            for (std::size_t i = onset; i < imagery_end; ++i) {
                const double phase = omega * static_cast<double>(i - onset) + phi0 + jitter[i - onset];
                data(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(base + i)) +=
                    static_cast<float>(spec.signal_uv * std::cos(phase));
            }
        }
    }
    return EegRecording(spec.montage, fs, std::move(data), std::move(events));
}

SynthSpec default_synth_spec(std::uint64_t seed)
{
    SynthSpec spec;
    spec.seed = seed;
    const auto& m = spec.montage;
    spec.planted_channels[0] = {m.index_of("Fp1"), m.index_of("O1")};
    spec.planted_channels[1] = {m.index_of("Fp2"), m.index_of("O2")};
    spec.planted_channels[2] = {m.index_of("AF3"), m.index_of("Oz")};
    spec.planted_channels[3] = {m.index_of("AF4"), m.index_of("POz")};
    return spec;
}

}  // namespace vmi::core

#include "vmi/dsp/ersp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "vmi/dsp/fft.hpp"
#include "vmi/error.hpp"
#include "vmi/format.hpp"

namespace vmi::dsp {

TfMap ersp_channel(const core::EpochSet& epochs, std::size_t channel, const ErspOptions& opt)
{
    if (epochs.trials() == 0) {
        throw EmptyInputError("ERSP of an empty epoch set");
    }
    if (channel >= epochs.channels()) {
        throw RangeError("channel index out of range");
    }
    if (opt.n_times < 2) {
        throw RangeError("n_times must be at least 2");
    }
    const double fs = epochs.fs();
    const std::size_t n = epochs.samples();
    const std::size_t win = opt.window_samples != 0
                                ? opt.window_samples
                                : static_cast<std::size_t>(std::llround(256.0 * fs / 250.0));
    if (win < 2 || win > n) {
        throw RangeError("ERSP window longer than the epoch");
    }
    if (epochs.t0_ms() > opt.baseline.start_ms) {
        throw RangeError("epochs start after the baseline window; baseline samples missing");
    }

    const std::size_t hop = std::max<std::size_t>(1, (n - win) / (opt.n_times - 1));
    const std::size_t n_frames = (n - win) / hop + 1;
    std::vector<double> centers(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        centers[f] = epochs.t0_ms() + (static_cast<double>(f * hop) + win / 2.0) * 1000.0 / fs;
    }

    std::vector<std::size_t> bins;
    for (std::size_t k = 0; k <= win / 2; ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(win);
        if (f >= opt.f_lo_hz && f <= opt.f_hi_hz) {
            bins.push_back(k);
        }
    }
    if (bins.empty()) {
        throw RangeError("no frequency bins inside the requested range");
    }

    std::vector<double> window(win);
    for (std::size_t i = 0; i < win; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
    }

    Eigen::MatrixXd power = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bins.size()), static_cast<Eigen::Index>(n_frames));
    FftPlan plan(win);
    std::vector<Complex> buf(win);
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
        auto x = epochs.series(t, channel);
        for (std::size_t f = 0; f < n_frames; ++f) {
            for (std::size_t i = 0; i < win; ++i) {
                buf[i] = x[f * hop + i] * window[i];
            }
            plan.forward(buf);
            for (std::size_t b = 0; b < bins.size(); ++b) {
                power(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(f)) += std::norm(buf[bins[b]]);
            }
        }
    }
    power /= static_cast<double>(epochs.trials());

    std::vector<Eigen::Index> base_frames;
    for (std::size_t f = 0; f < n_frames; ++f) {
        if (centers[f] >= opt.baseline.start_ms && centers[f] < opt.baseline.end_ms) {
            base_frames.push_back(static_cast<Eigen::Index>(f));
        }
    }
    if (base_frames.empty()) {
        throw RangeError("no analysis frame centred inside the baseline window");
    }

    Eigen::MatrixXd db(power.rows(), power.cols());
    for (Eigen::Index b = 0; b < power.rows(); ++b) {
        double base = 0.0;
        for (Eigen::Index f : base_frames) {
            base += power(b, f);
        }
        base /= static_cast<double>(base_frames.size());
        for (Eigen::Index f = 0; f < power.cols(); ++f) {
            db(b, f) = 10.0 * std::log10(power(b, f) / base);
        }
    }

    TfMap out;
    out.channel = epochs.channel_names()[channel];
    for (std::size_t k : bins) {
        out.freqs_hz.push_back(static_cast<double>(k) * fs / static_cast<double>(win));
    }
    out.times_ms.resize(opt.n_times);
    out.values.resize(db.rows(), static_cast<Eigen::Index>(opt.n_times));
    const double first = centers.front();
    const double last = centers.back();
    for (std::size_t i = 0; i < opt.n_times; ++i) {
        const double t = first + (last - first) * static_cast<double>(i) / static_cast<double>(opt.n_times - 1);
        out.times_ms[i] = t;
        // Position on the frame grid.
        const double pos = n_frames == 1 ? 0.0 : (t - first) / (last - first) * static_cast<double>(n_frames - 1);
        const auto lo = std::min<std::size_t>(static_cast<std::size_t>(std::floor(pos)), n_frames - 1);
        const std::size_t hi = std::min(lo + 1, n_frames - 1);
        const double w = pos - static_cast<double>(lo);
        for (Eigen::Index b = 0; b < db.rows(); ++b) {
            out.values(b, static_cast<Eigen::Index>(i)) =
                (1.0 - w) * db(b, static_cast<Eigen::Index>(lo)) + w * db(b, static_cast<Eigen::Index>(hi));
        }
    }
    return out;
}

std::vector<TfMap> ersp(const core::EpochSet& epochs, const ErspOptions& options)
{
    std::vector<TfMap> out;
    out.reserve(epochs.channels());
    for (std::size_t c = 0; c < epochs.channels(); ++c) {
        out.push_back(ersp_channel(epochs, c, options));
    }
    return out;
}

void write_tfmap_csv(const std::filesystem::path& path, const TfMap& map)
{
    std::ofstream os(path);
    os << "freq_hz";
    for (double t : map.times_ms) {
        os << ',' << format_number(t);
    }
    os << '\n';
    for (Eigen::Index b = 0; b < map.values.rows(); ++b) {
        os << format_number(map.freqs_hz[static_cast<std::size_t>(b)]);
        for (Eigen::Index i = 0; i < map.values.cols(); ++i) {
            os << ',' << format_number(map.values(b, i));
        }
        os << '\n';
    }
}

}  // namespace vmi::dsp

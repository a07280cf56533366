#include "vmi/stats/stats.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "vmi/dsp/psd.hpp"
#include "vmi/error.hpp"
#include "vmi/format.hpp"
#include "vmi/random.hpp"

namespace vmi::stats {

Eigen::MatrixXd band_power(const core::EpochSet& epochs, Band band)
{
    const double nyquist = epochs.fs() / 2.0;
    if (!(band.lo_hz >= 0.0 && band.lo_hz < band.hi_hz && band.hi_hz <= nyquist)) {
        throw RangeError("band must satisfy 0 <= lo < hi <= fs/2");
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(epochs.trials()), static_cast<Eigen::Index>(epochs.channels()));
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
        for (std::size_t c = 0; c < epochs.channels(); ++c) {
            const auto psd = dsp::welch_psd(epochs.series(t, c), epochs.fs());
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
                dsp::integrate_band(psd, band.lo_hz, band.hi_hz);
        }
    }
    return out;
}

namespace {

// t from the sums of d and d^2, shared by the observed and permuted statistics.
double t_from_moments(double sum, double sum_sq, std::size_t n)
{
    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    double var = (sum_sq - dn * mean * mean) / (dn - 1.0);
    // Cancellation noise around an exactly-zero variance.
    if (var <= 1e-14 * std::max(1.0, sum_sq / dn)) {
        var = 0.0;
    }
    if (var == 0.0) {
        if (mean == 0.0) {
            return 0.0;
        }
        return mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return mean / std::sqrt(var / dn);
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw ShapeError("paired samples must have equal length");
    }
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = a[i] - b[i];
    }
    return d;
}

bool exceeds(double candidate, double observed)
{
    if (std::isinf(observed)) {
        return std::isinf(candidate);
    }
    return candidate >= observed * (1.0 - 1e-12);
}

}  // namespace

double paired_t(std::span<const double> a, std::span<const double> b)
{
    const auto d = differences(a, b);
    if (d.size() < 2) {
        throw RangeError("paired t needs at least two pairs");
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double v : d) {
        sum += v;
    }
    // Centered second moment for accuracy; rebuilt into a raw sum for t_from_moments.
    const double mean = sum / static_cast<double>(d.size());
    double ss = 0.0;
    for (double v : d) {
        ss += (v - mean) * (v - mean);
    }
    sum_sq = ss + static_cast<double>(d.size()) * mean * mean;
    return t_from_moments(sum, sum_sq, d.size());
}

double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t n_perm,
                        std::uint64_t seed, PermutationMode mode)
{
    const auto d = differences(a, b);
    const std::size_t n = d.size();
    if (n < 2) {
        throw RangeError("permutation test needs at least two pairs");
    }
    if (n_perm < 1) {
        throw RangeError("n_perm must be at least 1");
    }
    double sum_sq = 0.0;
    for (double v : d) {
        sum_sq += v * v;
    }
    double sum = 0.0;
    for (double v : d) {
        sum += v;
    }
    // Same formula as the permuted statistics so the identity flip ties exactly.
    const double observed = std::abs(t_from_moments(sum, sum_sq, n));

    // Flipping signs leaves sum of squares unchanged, only the sum moves.
    auto flipped_abs_t = [&](auto&& sign_of) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += sign_of(i) ? -d[i] : d[i];
        }
        return std::abs(t_from_moments(s, sum_sq, n));
    };

    const bool can_enumerate = n < 63 && (std::uint64_t{1} << n) <= n_perm;
    if (mode == PermutationMode::Exhaustive || (mode == PermutationMode::Auto && can_enumerate)) {
        if (n >= 31) {
            throw RangeError("exhaustive enumeration limited to 30 pairs");
        }
        const std::uint64_t total = std::uint64_t{1} << n;
        std::uint64_t hits = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            if (exceeds(flipped_abs_t([mask](std::size_t i) { return ((mask >> i) & 1U) != 0; }), observed)) {
                ++hits;
            }
        }
        return static_cast<double>(hits) / static_cast<double>(total);
    }

    std::mt19937_64 rng(seed);
    std::uint64_t hits = 0;
    std::vector<bool> flips(n);
    for (std::size_t p = 0; p < n_perm; ++p) {
        for (std::size_t i = 0; i < n; i += 64) {
            const std::uint64_t bits = rng();
            for (std::size_t j = i; j < std::min(n, i + 64); ++j) {
                flips[j] = ((bits >> (j - i)) & 1U) != 0;
            }
        }
        if (exceeds(flipped_abs_t([&flips](std::size_t i) { return static_cast<bool>(flips[i]); }), observed)) {
            ++hits;
        }
    }
    return static_cast<double>(1 + hits) / static_cast<double>(1 + n_perm);
}

StatMap stat_map(const core::EpochSet& imagery, const core::EpochSet& rest, Band band, std::size_t n_perm,
                 std::uint64_t seed)
{
    if (imagery.trials() != rest.trials()) {
        throw ShapeError("imagery and rest epochs must pair trial by trial");
    }
    if (imagery.channel_names() != rest.channel_names()) {
        throw ShapeError("imagery and rest epochs use different channels");
    }
    const Eigen::MatrixXd pi = band_power(imagery, band);
    const Eigen::MatrixXd pr = band_power(rest, band);
    StatMap map;
    map.channel_names = imagery.channel_names();
    for (Eigen::Index c = 0; c < pi.cols(); ++c) {
        const Eigen::VectorXd a = pi.col(c);
        const Eigen::VectorXd b = pr.col(c);
        std::span<const double> sa(a.data(), static_cast<std::size_t>(a.size()));
        std::span<const double> sb(b.data(), static_cast<std::size_t>(b.size()));
        const double t = paired_t(sa, sb);
        const double p =
            permutation_test(sa, sb, n_perm, derive_seed(seed, "stat-map:" + map.channel_names[static_cast<std::size_t>(c)]));
        map.t_values.push_back(t);
        map.p_values.push_back(p);
        map.significant.push_back(p <= StatMap::alpha);
    }
    return map;
}

void write_stat_map_csv(const std::filesystem::path& path, const StatMap& map)
{
    std::ofstream os(path);
    os << "channel,t,p,significant\n";
    for (std::size_t c = 0; c < map.channel_names.size(); ++c) {
        os << map.channel_names[c] << ',' << format_number(map.t_values[c]) << ',' << format_number(map.p_values[c])
           << ',' << (map.significant[c] ? 1 : 0) << '\n';
    }
}

}  // namespace vmi::stats

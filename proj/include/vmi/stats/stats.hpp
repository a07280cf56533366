#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmi/core/epochs.hpp"

namespace vmi::stats {

struct Band {
    double lo_hz = 0.5;
    double hi_hz = 13.0;
};

// trials x channels band power: integral of the Welch PSD (1 s Hann
// segments, 50% overlap) over the band. RangeError unless
// 0 <= lo < hi <= fs/2.
Eigen::MatrixXd band_power(const core::EpochSet& epochs, Band band);

// Paired t statistic mean(d) / (sd(d) / sqrt(n)), d = a - b, sample sd.
// Zero-variance differences give +-infinity (nonzero mean) or 0 (all zero).
// RangeError for n < 2, ShapeError for unequal lengths.
double paired_t(std::span<const double> a, std::span<const double> b);

enum class PermutationMode {
    Auto,        // exhaustive when 2^n <= n_perm, Monte Carlo otherwise
    Exhaustive,  // all 2^n sign patterns, p = #{|t*| >= |t|} / 2^n
    MonteCarlo,  // n_perm random sign flips, p = (1 + #{|t*| >= |t|}) / (1 + n_perm)
};

// Paired sign-flip permutation test on |t|.
double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t n_perm,
                        std::uint64_t seed, PermutationMode mode = PermutationMode::Auto);

struct StatMap {
    std::vector<std::string> channel_names;
    std::vector<double> t_values;
    std::vector<double> p_values;
    std::vector<bool> significant;

    static constexpr double alpha = 0.01;
};

// Imagery vs rest band power per channel, paired by trial index. Each channel
// draws its permutations from its own stream derived from (seed, channel).
StatMap stat_map(const core::EpochSet& imagery, const core::EpochSet& rest, Band band, std::size_t n_perm,
                 std::uint64_t seed);

void write_stat_map_csv(const std::filesystem::path& path, const StatMap& map);

}  // namespace vmi::stats

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vmi/core/epochs.hpp"

namespace vmi::dsp {

// Event-related spectral perturbation of one channel: dB change of the
// trial-averaged power against the mean power of the baseline window.
struct TfMap {
    std::string channel;
    std::vector<double> freqs_hz;
    std::vector<double> times_ms;
    Eigen::MatrixXd values;  // freqs x times
};

struct ErspOptions {
    core::WindowMs baseline{-500.0, 0.0};
    double f_lo_hz = 3.0;
    double f_hi_hz = 50.0;
    // Hann window length; 0 selects 256 samples at 250 Hz, scaled with fs.
    std::size_t window_samples = 0;
    std::size_t n_times = 400;
};

// Short-time Fourier ERSP. The hop is the largest one that still yields at
// least n_times frames; the frame grid is then linearly resampled onto
// exactly n_times points between the first and last frame centre. Throws
// RangeError when no frame centre falls inside the baseline window.
TfMap ersp_channel(const core::EpochSet& epochs, std::size_t channel, const ErspOptions& options = {});
std::vector<TfMap> ersp(const core::EpochSet& epochs, const ErspOptions& options = {});

// Header row: freq_hz, then times_ms; one row per frequency.
void write_tfmap_csv(const std::filesystem::path& path, const TfMap& map);

}  // namespace vmi::dsp

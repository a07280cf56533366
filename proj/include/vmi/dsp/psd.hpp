#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vmi::dsp {

// One-sided power spectral density, power in uV^2/Hz.
struct Spectrum {
    std::vector<double> freqs_hz;
    std::vector<double> power;
};

// Averaged Hann-windowed periodograms of mean-removed segments. seg_len = 0
// selects one second of samples (clipped to the series length). RangeError
// when seg_len exceeds the series or overlap is outside [0, 1).
Spectrum welch_psd(std::span<const double> x, double fs, std::size_t seg_len = 0, double overlap = 0.5);

// Area under the piecewise-linear PSD between lo and hi (trapezoid rule with
// interpolated band edges).
double integrate_band(const Spectrum& s, double lo_hz, double hi_hz);

// Columns: freq_hz, then one column per named spectrum (all on the same grid).
void write_spectra_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       const std::vector<Spectrum>& spectra);

}  // namespace vmi::dsp

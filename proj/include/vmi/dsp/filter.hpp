#pragma once

#include <complex>
#include <span>
#include <vector>

namespace vmi::dsp {

// Second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

class SosFilter {
public:
    SosFilter() = default;
    explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

    const std::vector<Biquad>& sections() const noexcept { return sections_; }
    // Number of poles.
    int order() const noexcept;

    std::complex<double> response(double freq_hz, double fs) const;

    // Single causal pass, zero initial state.
    std::vector<double> apply(std::span<const double> x) const;
    // Forward-backward pass with odd reflection padding of 3 x order samples
    // and step-response initial conditions. Zero phase, squared magnitude.
    std::vector<double> filtfilt(std::span<const double> x) const;

private:
    std::vector<double> run(std::span<const double> x, bool steady_state_init) const;

    std::vector<Biquad> sections_;
};

// Digital Butterworth designs via the bilinear transform with prewarping.
// `prototype_order` is the order of the analog low-pass prototype, so the
// band-pass has 2 * prototype_order poles.
SosFilter butterworth_bandpass(int prototype_order, double lo_hz, double hi_hz, double fs);
SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs);

// Zero-phase 4th-order Butterworth band-pass. RangeError unless 0 < lo < hi < fs/2.
std::vector<double> bandpass(std::span<const double> x, double lo_hz, double hi_hz, double fs);

// Keeps every `factor`-th sample starting at 0; output length ceil(n / factor).
// With anti_alias set, a zero-phase 8th-order Butterworth low-pass at 80% of
// the new Nyquist frequency runs first (fs is then required).
std::vector<double> downsample(std::span<const double> x, int factor, bool anti_alias = false, double fs = 0.0);

}  // namespace vmi::dsp

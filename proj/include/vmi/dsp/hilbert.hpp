#pragma once

#include <span>
#include <vector>

#include "vmi/dsp/fft.hpp"

namespace vmi::dsp {

// x + i * H{x}, built by zeroing negative frequencies. Requires at least four
// samples (RangeError otherwise).
std::vector<Complex> analytic_signal(std::span<const double> x);
std::vector<Complex> analytic_signal(std::span<const double> x, const FftPlan& plan);

}  // namespace vmi::dsp

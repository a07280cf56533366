#include "vmi/dsp/hilbert.hpp"

#include "vmi/error.hpp"

namespace vmi::dsp {

std::vector<Complex> analytic_signal(std::span<const double> x)
{
    if (x.empty()) {
        throw EmptyInputError("analytic signal of an empty series");
    }
    return analytic_signal(x, FftPlan(x.size()));
}

std::vector<Complex> analytic_signal(std::span<const double> x, const FftPlan& plan)
{
    const std::size_t n = x.size();
    if (n < 4) {
        throw RangeError("analytic signal needs at least 4 samples");
    }
    if (plan.size() != n) {
        throw ShapeError("plan length does not match the series");
    }
    std::vector<Complex> spec(x.begin(), x.end());
    plan.forward(spec);
    // Keep DC (and Nyquist for even n), double positive bins, drop negative ones.
    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < n; ++k) {
        if (k < (n + 1) / 2) {
            spec[k] *= 2.0;
        } else if (!(n % 2 == 0 && k == half)) {
            spec[k] = 0.0;
        }
    }
    plan.inverse(spec);
    return spec;
}

}  // namespace vmi::dsp

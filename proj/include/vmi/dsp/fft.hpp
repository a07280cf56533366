#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vmi::dsp {

using Complex = std::complex<double>;

// Precomputed transform of a fixed length. Power-of-two lengths use an
// iterative radix-2 kernel; every other length goes through Bluestein's
// chirp-z reformulation on a padded power-of-two transform.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const noexcept { return n_; }

    // In place, unnormalized: X[k] = sum_n x[n] exp(-2 pi i k n / N).
    void forward(std::span<Complex> data) const;
    // In place, scaled by 1/N so that inverse(forward(x)) == x.
    void inverse(std::span<Complex> data) const;

private:
    void radix2(std::span<Complex> data, bool inverse) const;

    std::size_t n_;
    std::size_t m_;  // radix-2 working length
    std::vector<Complex> twiddles_;
    std::vector<std::size_t> bitrev_;
    // Bluestein only.
    std::vector<Complex> chirp_;
    std::vector<Complex> kernel_fft_;
};

// Throw EmptyInputError on empty input.
std::vector<Complex> fft(std::span<const Complex> x);
std::vector<Complex> ifft(std::span<const Complex> x);
std::vector<Complex> fft_real(std::span<const double> x);

}  // namespace vmi::dsp

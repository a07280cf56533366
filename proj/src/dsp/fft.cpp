#include "vmi/dsp/fft.hpp"

#include <bit>
#include <numbers>

#include "vmi/error.hpp"

namespace vmi::dsp {

namespace {

inline Complex mul(Complex a, Complex b)
{
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n)
{
    if (n_ == 0) {
        throw EmptyInputError("transform length must be positive");
    }
    const bool pow2 = std::has_single_bit(n_);
    m_ = pow2 ? n_ : std::bit_ceil(2 * n_ - 1);

    twiddles_.resize(m_ / 2);
    for (std::size_t j = 0; j < m_ / 2; ++j) {
        const double a = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m_);
        twiddles_[j] = {std::cos(a), std::sin(a)};
    }
    bitrev_.resize(m_);
    const int bits = std::countr_zero(m_);
    for (std::size_t i = 0; i < m_; ++i) {
        std::size_t r = 0;
        for (int b = 0; b < bits; ++b) {
            r |= ((i >> b) & 1U) << (bits - 1 - b);
        }
        bitrev_[i] = r;
    }

    if (!pow2) {
        // chirp[k] = exp(-i pi k^2 / n); k^2 reduced mod 2n to keep the angle exact.
        chirp_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t k2 = (k * k) % (2 * n_);
            const double a = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n_);
            chirp_[k] = {std::cos(a), std::sin(a)};
        }
        kernel_fft_.assign(m_, Complex{});
        kernel_fft_[0] = std::conj(chirp_[0]);
        for (std::size_t k = 1; k < n_; ++k) {
            kernel_fft_[k] = std::conj(chirp_[k]);
            kernel_fft_[m_ - k] = std::conj(chirp_[k]);
        }
        radix2(kernel_fft_, false);
    }
}

void FftPlan::radix2(std::span<Complex> a, bool inverse) const
{
    for (std::size_t i = 0; i < m_; ++i) {
        if (i < bitrev_[i]) {
            std::swap(a[i], a[bitrev_[i]]);
        }
    }
    // Butterflies on raw re/im pairs; std::complex multiplication carries
    // inf/nan recovery branches that dominate the runtime otherwise.
    auto* d = reinterpret_cast<double*>(a.data());
    const auto* tw = reinterpret_cast<const double*>(twiddles_.data());
    const double sign = inverse ? -1.0 : 1.0;
    for (std::size_t len = 2; len <= m_; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = m_ / len;
        for (std::size_t start = 0; start < m_; start += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const double wr = tw[2 * j * step];
                const double wi = sign * tw[2 * j * step + 1];
                double* u = d + 2 * (start + j);
                double* v = d + 2 * (start + j + half);
                const double vr = v[0] * wr - v[1] * wi;
                const double vi = v[0] * wi + v[1] * wr;
                v[0] = u[0] - vr;
                v[1] = u[1] - vi;
                u[0] += vr;
                u[1] += vi;
            }
        }
    }
}

void FftPlan::forward(std::span<Complex> data) const
{
    if (data.size() != n_) {
        throw ShapeError("fft plan length mismatch");
    }
    if (chirp_.empty()) {
        radix2(data, false);
        return;
    }
    std::vector<Complex> work(m_, Complex{});
    for (std::size_t k = 0; k < n_; ++k) {
        work[k] = mul(data[k], chirp_[k]);
    }
    radix2(work, false);
    for (std::size_t k = 0; k < m_; ++k) {
        work[k] = mul(work[k], kernel_fft_[k]);
    }
    radix2(work, true);
    const double scale = 1.0 / static_cast<double>(m_);
    for (std::size_t k = 0; k < n_; ++k) {
        data[k] = mul(work[k] * scale, chirp_[k]);
    }
}

void FftPlan::inverse(std::span<Complex> data) const
{
    if (data.size() != n_) {
        throw ShapeError("fft plan length mismatch");
    }
    const double scale = 1.0 / static_cast<double>(n_);
    if (chirp_.empty()) {
        radix2(data, true);
        for (auto& v : data) {
            v *= scale;
        }
        return;
    }
    for (auto& v : data) {
        v = std::conj(v);
    }
    forward(data);
    for (auto& v : data) {
        v = std::conj(v) * scale;
    }
}

std::vector<Complex> fft(std::span<const Complex> x)
{
    FftPlan plan(x.size());
    std::vector<Complex> out(x.begin(), x.end());
    plan.forward(out);
    return out;
}

std::vector<Complex> ifft(std::span<const Complex> x)
{
    FftPlan plan(x.size());
    std::vector<Complex> out(x.begin(), x.end());
    plan.inverse(out);
    return out;
}

std::vector<Complex> fft_real(std::span<const double> x)
{
    FftPlan plan(x.size());
    std::vector<Complex> out(x.begin(), x.end());
    plan.forward(out);
    return out;
}

}  // namespace vmi::dsp

#include "vmi/dsp/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vmi/error.hpp"

namespace vmi::dsp {

namespace {

using C = std::complex<double>;

C bilinear(C s, double fs)
{
    return (2.0 * fs + s) / (2.0 * fs - s);
}

double prewarp(double f, double fs)
{
    return 2.0 * fs * std::tan(std::numbers::pi * f / fs);
}

// Left-half-plane poles of the normalized analog Butterworth prototype.
std::vector<C> prototype_poles(int order)
{
    std::vector<C> poles;
    for (int k = 1; k <= order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
        poles.push_back(std::polar(1.0, theta));
    }
    return poles;
}

// Groups digital poles into conjugate pairs (and leftover real poles) and
// builds one denominator per group. Numerators are filled in by the caller.
std::vector<Biquad> pole_sections(const std::vector<C>& zpoles)
{
    std::vector<Biquad> out;
    std::vector<double> reals;
    for (const C& p : zpoles) {
        if (std::abs(p.imag()) < 1e-12) {
            reals.push_back(p.real());
        } else if (p.imag() > 0) {
            Biquad b;
            b.a1 = -2.0 * p.real();
            b.a2 = std::norm(p);
            out.push_back(b);
        }
    }
    std::sort(reals.begin(), reals.end());
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
        Biquad b;
        b.a1 = -(reals[i] + reals[i + 1]);
        b.a2 = reals[i] * reals[i + 1];
        out.push_back(b);
    }
    if (reals.size() % 2 == 1) {
        Biquad b;
        b.a1 = -reals.back();
        b.a2 = 0.0;
        out.push_back(b);
    }
    return out;
}

C section_response(const Biquad& s, double omega)
{
    const C z1 = std::polar(1.0, -omega);
    const C z2 = z1 * z1;
    return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

}  // namespace

int SosFilter::order() const noexcept
{
    int n = 0;
    for (const auto& s : sections_) {
        n += s.a2 != 0.0 ? 2 : 1;
    }
    return n;
}

std::complex<double> SosFilter::response(double freq_hz, double fs) const
{
    const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
    C h = 1.0;
    for (const auto& s : sections_) {
        h *= section_response(s, omega);
    }
    return h;
}

std::vector<double> SosFilter::run(std::span<const double> x, bool steady_state_init) const
{
    std::vector<double> y(x.begin(), x.end());
    if (y.empty()) {
        return y;
    }
    double level = y.front();
    for (const auto& s : sections_) {
        double z1 = 0.0;
        double z2 = 0.0;
        if (steady_state_init) {
            // Transposed direct form II state for a step of height `level`.
            const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
            const double out = gain * level;
            z2 = s.b2 * level - s.a2 * out;
            z1 = s.b1 * level - s.a1 * out + z2;
            level = out;
        }
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> SosFilter::apply(std::span<const double> x) const
{
    return run(x, false);
}

std::vector<double> SosFilter::filtfilt(std::span<const double> x) const
{
    const std::size_t n = x.size();
    if (n == 0) {
        return {};
    }
    const std::size_t pad = std::min<std::size_t>(3 * static_cast<std::size_t>(order()), n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) {
        ext.push_back(2.0 * x[0] - x[i]);
    }
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) {
        ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    std::vector<double> fwd = run(ext, true);
    std::reverse(fwd.begin(), fwd.end());
    std::vector<double> back = run(fwd, true);
    std::reverse(back.begin(), back.end());
    return {back.begin() + static_cast<std::ptrdiff_t>(pad), back.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

SosFilter butterworth_bandpass(int prototype_order, double lo_hz, double hi_hz, double fs)
{
    if (prototype_order < 1) {
        throw RangeError("filter order must be positive");
    }
    if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs / 2.0)) {
        throw RangeError("band-pass requires 0 < lo < hi < fs/2");
    }
    const double wl = prewarp(lo_hz, fs);
    const double wh = prewarp(hi_hz, fs);
    const double bw = wh - wl;
    const double w0sq = wl * wh;

    std::vector<C> zpoles;
    for (const C& p : prototype_poles(prototype_order)) {
        const C half = p * bw / 2.0;
        const C root = std::sqrt(half * half - w0sq);
        zpoles.push_back(bilinear(half + root, fs));
        zpoles.push_back(bilinear(half - root, fs));
    }
    std::vector<Biquad> sections = pole_sections(zpoles);

    // Zeros: half at z = 1 (DC), half at z = -1 (Nyquist); one of each per section.
    const double f0 = fs / std::numbers::pi * std::atan(std::sqrt(w0sq) / (2.0 * fs));
    const double omega0 = 2.0 * std::numbers::pi * f0 / fs;
    for (auto& s : sections) {
        s.b0 = 1.0;
        s.b1 = 0.0;
        s.b2 = -1.0;
        const double g = std::abs(section_response(s, omega0));
        s.b0 /= g;
        s.b2 /= g;
    }
    return SosFilter(std::move(sections));
}

SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs)
{
    if (order < 1) {
        throw RangeError("filter order must be positive");
    }
    if (!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0)) {
        throw RangeError("low-pass cutoff must lie in (0, fs/2)");
    }
    const double wc = prewarp(cutoff_hz, fs);
    std::vector<C> zpoles;
    for (const C& p : prototype_poles(order)) {
        zpoles.push_back(bilinear(p * wc, fs));
    }
    std::vector<Biquad> sections = pole_sections(zpoles);
    for (auto& s : sections) {
        if (s.a2 != 0.0) {
            s.b0 = 1.0;
            s.b1 = 2.0;
            s.b2 = 1.0;
        } else {
            s.b0 = 1.0;
            s.b1 = 1.0;
            s.b2 = 0.0;
        }
        const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        s.b0 /= g;
        s.b1 /= g;
        s.b2 /= g;
    }
    return SosFilter(std::move(sections));
}

std::vector<double> bandpass(std::span<const double> x, double lo_hz, double hi_hz, double fs)
{
    return butterworth_bandpass(4, lo_hz, hi_hz, fs).filtfilt(x);
}

std::vector<double> downsample(std::span<const double> x, int factor, bool anti_alias, double fs)
{
    if (factor < 1) {
        throw RangeError("downsampling factor must be at least 1");
    }
    std::vector<double> filtered;
    std::span<const double> src = x;
    if (anti_alias && factor > 1) {
        if (fs <= 0.0) {
            throw RangeError("anti-alias filtering needs the sampling rate");
        }
        filtered = butterworth_lowpass(8, 0.8 * fs / (2.0 * factor), fs).filtfilt(x);
        src = filtered;
    }
    const auto f = static_cast<std::size_t>(factor);
    std::vector<double> out;
    out.reserve((src.size() + f - 1) / f);
    for (std::size_t i = 0; i < src.size(); i += f) {
        out.push_back(src[i]);
    }
    return out;
}

}  // namespace vmi::dsp

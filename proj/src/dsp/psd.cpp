#include "vmi/dsp/psd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "vmi/dsp/fft.hpp"
#include "vmi/error.hpp"
#include "vmi/format.hpp"

namespace vmi::dsp {

Spectrum welch_psd(std::span<const double> x, double fs, std::size_t seg_len, double overlap)
{
    if (x.empty()) {
        throw EmptyInputError("PSD of an empty series");
    }
    if (fs <= 0.0) {
        throw RangeError("sampling rate must be positive");
    }
    if (seg_len == 0) {
        seg_len = std::min<std::size_t>(static_cast<std::size_t>(std::llround(fs)), x.size());
    }
    if (seg_len > x.size()) {
        throw RangeError("segment length " + std::to_string(seg_len) + " exceeds series length " +
                         std::to_string(x.size()));
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) {
        throw RangeError("overlap must lie in [0, 1)");
    }
    const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(seg_len * (1.0 - overlap))));

    std::vector<double> window(seg_len);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) {
        // Periodic Hann.
        window[i] = seg_len == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / seg_len);
        wsum2 += window[i] * window[i];
    }
    const std::size_t n_freq = seg_len / 2 + 1;
    Spectrum out;
    out.freqs_hz.resize(n_freq);
    out.power.assign(n_freq, 0.0);
    for (std::size_t k = 0; k < n_freq; ++k) {
        out.freqs_hz[k] = static_cast<double>(k) * fs / static_cast<double>(seg_len);
    }

    FftPlan plan(seg_len);
    std::vector<Complex> buf(seg_len);
    std::size_t n_seg = 0;
    for (std::size_t start = 0; start + seg_len <= x.size(); start += hop) {
        double mean = 0.0;
        for (std::size_t i = 0; i < seg_len; ++i) {
            mean += x[start + i];
        }
        mean /= static_cast<double>(seg_len);
        for (std::size_t i = 0; i < seg_len; ++i) {
            buf[i] = (x[start + i] - mean) * window[i];
        }
        plan.forward(buf);
        for (std::size_t k = 0; k < n_freq; ++k) {
            out.power[k] += std::norm(buf[k]);
        }
        ++n_seg;
    }
    const double scale = 1.0 / (fs * wsum2 * static_cast<double>(n_seg));
    for (std::size_t k = 0; k < n_freq; ++k) {
        const bool edge = k == 0 || (seg_len % 2 == 0 && k == n_freq - 1);
        out.power[k] *= scale * (edge ? 1.0 : 2.0);
    }
    return out;
}

double integrate_band(const Spectrum& s, double lo_hz, double hi_hz)
{
    if (!(hi_hz > lo_hz)) {
        throw RangeError("band must satisfy lo < hi");
    }
    const auto& f = s.freqs_hz;
    const auto& p = s.power;
    if (f.size() < 2 || lo_hz < f.front() || hi_hz > f.back() + 1e-9) {
        throw RangeError("band outside the spectrum's frequency range");
    }
    auto interp = [&](double x) {
        auto it = std::upper_bound(f.begin(), f.end(), x);
        if (it == f.end()) {
            return p.back();
        }
        const std::size_t j = static_cast<std::size_t>(it - f.begin());
        const double t = (x - f[j - 1]) / (f[j] - f[j - 1]);
        return p[j - 1] + t * (p[j] - p[j - 1]);
    };
    const double hi = std::min(hi_hz, f.back());
    double area = 0.0;
    double prev_f = lo_hz;
    double prev_p = interp(lo_hz);
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] <= lo_hz) {
            continue;
        }
        if (f[k] >= hi) {
            break;
        }
        area += 0.5 * (prev_p + p[k]) * (f[k] - prev_f);
        prev_f = f[k];
        prev_p = p[k];
    }
    area += 0.5 * (prev_p + interp(hi)) * (hi - prev_f);
    return area;
}

void write_spectra_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       const std::vector<Spectrum>& spectra)
{
    if (names.size() != spectra.size() || spectra.empty()) {
        throw ShapeError("one name per spectrum required");
    }
    std::ofstream os(path);
    os << "freq_hz";
    for (const auto& n : names) {
        os << ',' << n;
    }
    os << '\n';
    const auto& freqs = spectra.front().freqs_hz;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        os << format_number(freqs[k]);
        for (const auto& s : spectra) {
            os << ',' << format_number(s.power.at(k));
        }
        os << '\n';
    }
}

}  // namespace vmi::dsp

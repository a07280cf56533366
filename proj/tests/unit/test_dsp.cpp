#include <doctest.h>

#include <algorithm>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "vmi/dsp/ersp.hpp"
#include "vmi/dsp/fft.hpp"
#include "vmi/dsp/filter.hpp"
#include "vmi/dsp/hilbert.hpp"
#include "vmi/dsp/psd.hpp"
#include "vmi/error.hpp"

using namespace vmi;
using namespace vmi::dsp;
using testutil::sine;

namespace {

std::vector<Complex> naive_dft(const std::vector<Complex>& x)
{
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{};
        for (std::size_t j = 0; j < n; ++j) {
            // k*j reduced mod n keeps the angle small and exact.
            const double a = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
            acc += x[j] * Complex(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<Complex> random_complex(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> d;
    std::vector<Complex> x(n);
    for (auto& v : x) {
        v = {d(rng), d(rng)};
    }
    return x;
}

double max_abs_diff(const std::vector<Complex>& a, const std::vector<Complex>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

std::size_t argmax(const std::vector<double>& v)
{
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("fft of an impulse and of a constant")
{
    const auto a = fft(std::vector<Complex>{1, 0, 0, 0});
    for (const auto& v : a) {
        CHECK(std::abs(v - Complex(1, 0)) < 1e-15);
    }
    const auto b = fft(std::vector<Complex>{1, 1, 1, 1});
    CHECK(std::abs(b[0] - Complex(4, 0)) < 1e-15);
    for (std::size_t k = 1; k < 4; ++k) {
        CHECK(std::abs(b[k]) < 1e-15);
    }
    CHECK_THROWS_AS(fft(std::vector<Complex>{}), EmptyInputError);
}

TEST_CASE("fft matches the naive DFT for every length up to 64")
{
    std::mt19937_64 rng(1);
    for (std::size_t n = 1; n <= 64; ++n) {
        const auto x = random_complex(n, rng);
        const auto X = fft(x);
        const auto ref = naive_dft(x);
        double scale = 0.0;
        for (const auto& v : ref) {
            scale = std::max(scale, std::abs(v));
        }
        CAPTURE(n);
        CHECK(max_abs_diff(X, ref) <= 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("fft round trip and Parseval on pipeline lengths")
{
    std::mt19937_64 rng(2);
    for (std::size_t n : {24, 125, 256, 500, 1000, 1250, 1625}) {
        const auto x = random_complex(n, rng);
        const auto X = fft(x);
        const auto back = ifft(X);
        CHECK(max_abs_diff(back, x) < 1e-9);
        double ex = 0.0, eX = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ex += std::norm(x[i]);
            eX += std::norm(X[i]);
        }
        CHECK(std::abs(ex - eX / static_cast<double>(n)) <= 1e-9 * ex);
    }
}

TEST_CASE("real fft is conjugate symmetric")
{
    std::mt19937_64 rng(3);
    const auto x = testutil::gaussian(37, rng);
    const auto X = fft_real(x);
    for (std::size_t k = 1; k < X.size(); ++k) {
        CHECK(std::abs(X[k] - std::conj(X[X.size() - k])) < 1e-10);
    }
}

TEST_CASE("analytic signal")
{
    const double fs = 250.0;
    SUBCASE("real part reproduces the input")
    {
        std::mt19937_64 rng(4);
        const auto x = testutil::gaussian(333, rng);
        const auto a = analytic_signal(x);
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(std::abs(a[i].real() - x[i]) < 1e-9);
        }
    }
    SUBCASE("cosine has unit envelope away from the edges")
    {
        const auto x = sine(250, 10.0, fs, std::numbers::pi / 2);
        const auto a = analytic_signal(x);
        for (std::size_t i = 25; i < 225; ++i) {
            CHECK(std::abs(a[i]) == doctest::Approx(1.0).epsilon(0.02));
        }
    }
    SUBCASE("Hilbert pair of a sine is minus cosine")
    {
        const auto x = sine(500, 7.0, fs);
        const auto a = analytic_signal(x);
        for (std::size_t i = 50; i < 450; ++i) {
            const double c = std::cos(2.0 * std::numbers::pi * 7.0 * static_cast<double>(i) / fs);
            CHECK(a[i].imag() == doctest::Approx(-c).epsilon(0.02).scale(1.0));
        }
    }
    SUBCASE("negative frequencies vanish")
    {
        std::mt19937_64 rng(5);
        const auto x = testutil::gaussian(64, rng);
        const auto X = fft(analytic_signal(x));
        for (std::size_t k = 33; k < 64; ++k) {
            CHECK(std::abs(X[k]) < 1e-9);
        }
    }
    CHECK_THROWS_AS(analytic_signal(std::vector<double>{1, 2, 3}), RangeError);
}

TEST_CASE("band-pass passband follows the designed response")
{
    const double fs = 250.0;
    const auto filter = butterworth_bandpass(4, 0.5, 13.0, fs);
    const double gain10 = std::norm(filter.response(10.0, fs));  // forward-backward squares it
    const auto x = sine(20 * 250, 10.0, fs);
    const auto y = bandpass(x, 0.5, 13.0, fs);
    REQUIRE(y.size() == x.size());
    const double ratio = testutil::rms(y, 1000, 4000) / testutil::rms(x, 1000, 4000);
    CHECK(ratio == doctest::Approx(gain10).epsilon(0.01));
    // Well inside the band the response is flat.
    const auto x5 = sine(20 * 250, 5.0, fs);
    const auto y5 = bandpass(x5, 0.5, 13.0, fs);
    CHECK(testutil::rms(y5, 1000, 4000) / testutil::rms(x5, 1000, 4000) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("band-pass stopband and DC")
{
    const double fs = 250.0;
    // Steady state: the forward-backward start-up ringing of the 0.5 Hz
    // edge needs a few seconds to decay.
    const auto x = sine(20 * 250, 50.0, fs);
    const auto y = bandpass(x, 0.5, 13.0, fs);
    CHECK(testutil::rms(y, 1250, 3750) <= 0.01 * testutil::rms(x, 1250, 3750));

    const std::vector<double> dc(20 * 250, 3.0);
    const auto z = bandpass(dc, 0.5, 13.0, fs);
    for (std::size_t i = 1000; i < 4000; ++i) {
        REQUIRE(std::abs(z[i]) < 1e-3);
    }
}

TEST_CASE("band-pass is linear and zero phase")
{
    const double fs = 250.0;
    std::mt19937_64 rng(6);
    const auto a = testutil::gaussian(2000, rng);
    const auto b = testutil::gaussian(2000, rng);
    std::vector<double> mix(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        mix[i] = 2.5 * a[i] - 0.75 * b[i];
    }
    const auto fa = bandpass(a, 0.5, 13.0, fs);
    const auto fb = bandpass(b, 0.5, 13.0, fs);
    const auto fm = bandpass(mix, 0.5, 13.0, fs);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(std::abs(fm[i] - (2.5 * fa[i] - 0.75 * fb[i])) < 1e-9);
    }

    const auto x = sine(2500, 6.0, fs);
    const auto y = bandpass(x, 0.5, 13.0, fs);
    int best_lag = 0;
    double best = -1e300;
    for (int lag = -20; lag <= 20; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 500; i < 2000; ++i) {
            acc += x[i] * y[static_cast<std::size_t>(static_cast<int>(i) + lag)];
        }
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    CHECK(best_lag == 0);
}

TEST_CASE("band-pass argument checks")
{
    const std::vector<double> x(100, 0.0);
    CHECK_THROWS_AS(bandpass(x, 0.0, 13.0, 250.0), RangeError);
    CHECK_THROWS_AS(bandpass(x, 13.0, 0.5, 250.0), RangeError);
    CHECK_THROWS_AS(bandpass(x, 0.5, 125.0, 250.0), RangeError);
}

TEST_CASE("downsampling")
{
    std::vector<double> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(i);
    }
    const auto y = downsample(x, 4);
    REQUIRE(y.size() == 250);
    CHECK(y[3] == 12.0);
    CHECK(downsample(std::vector<double>(1001, 0.0), 4).size() == 251);
    CHECK_THROWS_AS(downsample(x, 0), RangeError);

    // 5 Hz sine at 1000 Hz becomes the same sine sampled at 250 Hz.
    const auto hi = sine(20000, 5.0, 1000.0);
    const auto lo = downsample(bandpass(hi, 0.5, 13.0, 1000.0), 4);
    const auto ref = sine(5000, 5.0, 250.0);
    const double g = std::norm(butterworth_bandpass(4, 0.5, 13.0, 1000.0).response(5.0, 1000.0));
    for (std::size_t k = 1250; k < 3750; ++k) {
        REQUIRE(std::abs(lo[k] - g * ref[k]) < 1e-3);
    }
    const auto aa = downsample(hi, 4, true, 1000.0);
    for (std::size_t k = 100; k < 4900; ++k) {
        CHECK(std::abs(aa[k] - ref[k]) < 1e-3);
    }
}

TEST_CASE("Welch PSD")
{
    const double fs = 250.0;
    SUBCASE("single tone peaks at its bin")
    {
        const auto s = welch_psd(sine(1000, 10.0, fs), fs);
        CHECK(s.freqs_hz.front() == 0.0);
        CHECK(s.freqs_hz.back() == doctest::Approx(fs / 2));
        CHECK(s.freqs_hz[argmax(s.power)] == doctest::Approx(10.0));
        CHECK(std::all_of(s.power.begin(), s.power.end(), [](double p) { return p >= 0.0; }));
    }
    SUBCASE("two tones give two local maxima")
    {
        auto x = sine(2000, 6.0, fs);
        const auto y = sine(2000, 11.0, fs, 0.3);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += y[i];
        }
        const auto s = welch_psd(x, fs);
        auto at = [&](double f) { return static_cast<std::size_t>(std::lround(f)); };  // 1 Hz bins
        for (double f : {6.0, 11.0}) {
            const auto k = at(f);
            CHECK(s.power[k] > s.power[k - 1]);
            CHECK(s.power[k] > s.power[k + 1]);
        }
    }
    SUBCASE("white noise integrates to its variance")
    {
        std::mt19937_64 rng(7);
        double mean_ratio = 0.0;
        const int runs = 50;
        for (int r = 0; r < runs; ++r) {
            const auto x = testutil::gaussian(2500, rng, 2.0);
            const auto s = welch_psd(x, fs);
            mean_ratio += integrate_band(s, 0.0, fs / 2) / 4.0;
        }
        mean_ratio /= runs;
        CHECK(mean_ratio == doctest::Approx(1.0).epsilon(0.10));
    }
    CHECK_THROWS_AS(welch_psd(std::vector<double>(100, 0.0), fs, 200), RangeError);
    CHECK_THROWS_AS(welch_psd(std::vector<double>(100, 0.0), fs, 50, 1.0), RangeError);
}

TEST_CASE("band integration interpolates edges")
{
    Spectrum s{{0, 1, 2, 3}, {1, 1, 1, 1}};
    CHECK(integrate_band(s, 0.5, 2.25) == doctest::Approx(1.75));
    Spectrum r{{0, 1, 2}, {0, 2, 4}};
    CHECK(integrate_band(r, 0.0, 2.0) == doctest::Approx(4.0));
    CHECK(integrate_band(r, 0.5, 1.5) == doctest::Approx(2.0));
}

namespace {

core::EpochSet burst_epochs(std::size_t trials, double burst_amp, std::uint64_t seed)
{
    const int fs = 250;
    const double t0 = -1500.0;
    const std::size_t n = 1625;  // -1500 .. 5000 ms
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise;
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    std::vector<double> phases(trials);
    for (auto& p : phases) {
        p = ph(rng);
    }
    return testutil::make_epochs(trials, 1, n, fs, std::vector<int>(trials, 0), [&](std::size_t t, std::size_t, std::size_t s) {
        const double ms = t0 + 1000.0 * static_cast<double>(s) / fs;
        double v = noise(rng);
        if (ms >= 500.0) {
            v += burst_amp * std::sin(2.0 * std::numbers::pi * 10.0 * ms / 1000.0 + phases[t]);
        }
        return v;
    }, t0);
}

double block_mean(const TfMap& m, double f_lo, double f_hi, double t_lo, double t_hi)
{
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t f = 0; f < m.freqs_hz.size(); ++f) {
        if (m.freqs_hz[f] < f_lo || m.freqs_hz[f] > f_hi) {
            continue;
        }
        for (std::size_t t = 0; t < m.times_ms.size(); ++t) {
            if (m.times_ms[t] >= t_lo && m.times_ms[t] < t_hi) {
                acc += m.values(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t));
                ++n;
            }
        }
    }
    return acc / static_cast<double>(n);
}

}  // namespace

TEST_CASE("ERSP grid")
{
    const auto e = burst_epochs(10, 1.0, 8);
    const auto m = ersp_channel(e, 0);
    CHECK(m.times_ms.size() == 400);
    CHECK(m.values.cols() == 400);
    CHECK(static_cast<std::size_t>(m.values.rows()) == m.freqs_hz.size());
    CHECK(m.freqs_hz.front() >= 3.0);
    CHECK(m.freqs_hz.back() <= 50.0);
    CHECK(std::is_sorted(m.times_ms.begin(), m.times_ms.end()));
    CHECK(m.channel == "ch0");
}

TEST_CASE("ERSP of a planted 10 Hz burst")
{
    const auto e = burst_epochs(40, 1.5, 9);
    const auto m = ersp_channel(e, 0);
    CHECK(block_mean(m, 8.0, 12.0, 1100.0, 5000.0) > 3.0);
    CHECK(std::abs(block_mean(m, 3.0, 50.0, -1000.0, -100.0)) < 1.0);
    // Baseline rows average to about 0 dB.
    CHECK(std::abs(block_mean(m, 3.0, 50.0, -500.0, 0.0)) < 0.5);
}

TEST_CASE("ERSP of noise stays near 0 dB")
{
    const auto e = burst_epochs(100, 0.0, 10);
    const auto m = ersp_channel(e, 0);
    std::size_t small = 0;
    for (Eigen::Index i = 0; i < m.values.size(); ++i) {
        small += std::abs(m.values.data()[i]) < 1.0 ? 1 : 0;
    }
    CHECK(static_cast<double>(small) / static_cast<double>(m.values.size()) > 0.8);
    CHECK(std::abs(m.values.mean()) < 0.5);
}

TEST_CASE("ERSP needs baseline samples")
{
    const auto e = testutil::make_epochs(2, 1, 1000, 250, {0, 1}, [](auto, auto, auto) { return 1.0; }, 500.0);
    CHECK_THROWS_AS(ersp_channel(e, 0), RangeError);
    const auto b = burst_epochs(2, 1.0, 11);
    CHECK_THROWS_AS(ersp_channel(b, 1), RangeError);
}

TEST_CASE("CSV exports")
{
    testutil::TempDir dir("dsp_csv");
    Spectrum s{{0, 1}, {2, 3}};
    write_spectra_csv(dir / "s.csv", {"A", "B"}, {s, s});
    std::ifstream is(dir / "s.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "freq_hz,A,B");
    std::string row;
    std::getline(is, row);
    CHECK(row == "0,2,2");

    const auto m = ersp_channel(burst_epochs(4, 1.0, 12), 0);
    write_tfmap_csv(dir / "t.csv", m);
    std::ifstream ts(dir / "t.csv");
    std::getline(ts, header);
    CHECK(std::count(header.begin(), header.end(), ',') == 400);
    std::size_t rows = 0;
    while (std::getline(ts, row)) {
        ++rows;
    }
    CHECK(rows == m.freqs_hz.size());
}

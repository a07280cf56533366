#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "vmi/core/epochs.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("vmi_test_" + tag + "_" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<double> sine(std::size_t n, double f_hz, double fs, double phase = 0.0, double amp = 1.0)
{
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amp * std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / fs + phase);
    }
    return x;
}

inline std::vector<double> gaussian(std::size_t n, std::mt19937_64& rng, double sd = 1.0)
{
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> x(n);
    for (double& v : x) {
        v = d(rng);
    }
    return x;
}

inline double rms(const std::vector<double>& x, std::size_t from = 0, std::size_t to = 0)
{
    if (to == 0) {
        to = x.size();
    }
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) {
        s += x[i] * x[i];
    }
    return std::sqrt(s / static_cast<double>(to - from));
}

// Epoch set from a generator g(trial, channel, sample).
template <class G>
vmi::core::EpochSet make_epochs(std::size_t trials, std::size_t channels, std::size_t samples, int fs,
                                std::vector<int> labels, G g, double t0_ms = 0.0)
{
    std::vector<std::string> names;
    for (std::size_t c = 0; c < channels; ++c) {
        names.push_back("ch" + std::to_string(c));
    }
    std::vector<double> data(trials * channels * samples);
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t s = 0; s < samples; ++s) {
                data[(t * channels + c) * samples + s] = g(t, c, s);
            }
        }
    }
    return vmi::core::EpochSet(names, fs, t0_ms, samples, std::move(labels), std::move(data));
}

inline std::vector<int> balanced_labels(std::size_t per_class, int classes = 4)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (int c = 0; c < classes; ++c) {
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace testutil

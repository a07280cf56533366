#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace vmi::nn {

// Storage with a fixed base alignment. Eigen peels unaligned heads with
// scalar code, so a varying malloc alignment would change the rounding of
// vectorized loops from run to run.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Dense (batch, maps, height, width) tensor, row-major.
struct Tensor4 {
    std::array<std::size_t, 4> dims{0, 0, 0, 0};
    Buffer values;

    Tensor4() = default;
    Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : dims{n, c, h, w}, values(n * c * h * w, fill)
    {
    }

    std::size_t batch() const noexcept { return dims[0]; }
    std::size_t maps() const noexcept { return dims[1]; }
    std::size_t height() const noexcept { return dims[2]; }
    std::size_t width() const noexcept { return dims[3]; }
    std::size_t size() const noexcept { return values.size(); }
    // Elements per batch item.
    std::size_t item_size() const noexcept { return dims[1] * dims[2] * dims[3]; }

    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
    {
        return values[((n * dims[1] + c) * dims[2] + h) * dims[3] + w];
    }
    double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const
    {
        return values[((n * dims[1] + c) * dims[2] + h) * dims[3] + w];
    }
    double* item(std::size_t n) { return values.data() + n * item_size(); }
    const double* item(std::size_t n) const { return values.data() + n * item_size(); }
};

}  // namespace vmi::nn

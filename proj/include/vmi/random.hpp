#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vmi {

// Derives an independent 64-bit seed for a named stream from a root seed.
// Streams are addressed by (component name, index) so that the order in
// which jobs run never changes the numbers a job sees.
std::uint64_t derive_seed(std::uint64_t root, std::string_view component, std::uint64_t index = 0);

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view component, std::uint64_t index = 0)
{
    return std::mt19937_64(derive_seed(root, component, index));
}

}  // namespace vmi

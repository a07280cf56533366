#pragma once

#include <charconv>
#include <string>

namespace vmi {

// Shortest round-trippable text for a double; keeps CSV output byte-stable.
inline std::string format_number(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

}  // namespace vmi

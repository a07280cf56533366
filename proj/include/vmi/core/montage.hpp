#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vmi::core {

// Ordered, unique list of electrode labels.
class Montage {
public:
    Montage() = default;
    explicit Montage(std::vector<std::string> names);

    // The 64-electrode 10/20 layout of the recording setup, in acquisition order.
    static const Montage& standard64();

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::string& name(std::size_t index) const;

    std::optional<std::size_t> find(std::string_view name) const;
    // Throws RangeError for unknown labels.
    std::size_t index_of(std::string_view name) const;
    std::vector<std::size_t> indices_of(const std::vector<std::string>& names) const;

    bool operator==(const Montage&) const = default;

private:
    std::vector<std::string> names_;
};

}  // namespace vmi::core

#include "vmi/core/montage.hpp"

#include <unordered_set>

#include "vmi/error.hpp"

namespace vmi::core {

Montage::Montage(std::vector<std::string> names) : names_(std::move(names))
{
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) {
            throw FormatError("duplicate channel name: " + n);
        }
    }
}

const Montage& Montage::standard64()
{
    static const Montage montage({
        "Fp1", "Fp2", "AF3", "AF4", "AF7", "AF8", "AFz",
        "F1",  "F2",  "F3",  "F4",  "F5",  "F6",  "F7",  "F8",  "Fz",
        "FC1", "FC2", "FC3", "FC4", "FC5", "FC6",
        "FT7", "FT8", "FT9", "FT10",
        "C1",  "C2",  "C3",  "C4",  "C5",  "C6",  "Cz",
        "T7",  "T8",
        "CP1", "CP2", "CP3", "CP4", "CP5", "CP6", "CPz",
        "TP7", "TP8", "TP9", "TP10",
        "P1",  "P2",  "P3",  "P4",  "P5",  "P6",  "P7",  "P8",  "Pz",
        "PO3", "PO4", "PO7", "PO8", "POz",
        "O1",  "O2",  "Oz",  "Iz",
    });
    return montage;
}

const std::string& Montage::name(std::size_t index) const
{
    if (index >= names_.size()) {
        throw RangeError("channel index " + std::to_string(index) + " outside montage of " +
                         std::to_string(names_.size()));
    }
    return names_[index];
}

std::optional<std::size_t> Montage::find(std::string_view name) const
{
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t Montage::index_of(std::string_view name) const
{
    if (auto idx = find(name)) {
        return *idx;
    }
    throw RangeError("unknown channel: " + std::string(name));
}

std::vector<std::size_t> Montage::indices_of(const std::vector<std::string>& names) const
{
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& n : names) {
        out.push_back(index_of(n));
    }
    return out;
}

}  // namespace vmi::core

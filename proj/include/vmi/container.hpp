#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace vmi {

// Binary container shared by recordings, epoch sets and model checkpoints:
//
//   "EEGB" | u8 version (=1) | u32 LE header length | UTF-8 JSON header |
//   float32 little-endian payload (until end of file)
//
// The payload layout is described by the header of each concrete kind.
struct Container {
    nlohmann::json header;
    std::vector<float> payload;
};

inline constexpr char kContainerMagic[4] = {'E', 'E', 'G', 'B'};
inline constexpr std::uint8_t kContainerVersion = 1;

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const float> payload);

// Throws FormatError on bad magic/version/header and CorruptionError on a
// truncated payload.
Container read_container(const std::filesystem::path& path);

// Checks header["kind"] when present; absent kind is accepted.
void expect_kind(const nlohmann::json& header, const char* kind);

}  // namespace vmi

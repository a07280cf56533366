#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace vmi::harness {

std::string sha256_hex(std::string_view bytes);
// FormatError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

// Run record written as manifest.json next to the artifacts. Holds no
// timestamps or absolute output paths, so equal runs give equal bytes.
class Manifest {
public:
    explicit Manifest(std::string command);

    void set_config(const nlohmann::json& config);
    void add_seed(const std::string& name, std::uint64_t value);
    void add_input(const std::filesystem::path& path);
    void add_note(const std::string& key, const nlohmann::json& value);

    // Hashes every regular file under out_dir (manifest.json excluded) and
    // writes out_dir / "manifest.json".
    nlohmann::json write(const std::filesystem::path& out_dir) const;

private:
    nlohmann::json doc_;
};

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vmi::harness

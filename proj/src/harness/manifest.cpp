#include "vmi/harness/manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <vector>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "vmi/error.hpp"

namespace vmi::harness {

namespace {

std::string to_hex(const unsigned char* data, unsigned int len)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    return to_hex(md.data(), len);
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot read " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

Manifest::Manifest(std::string command)
{
    doc_["tool"] = "vmi";
    doc_["command"] = std::move(command);
    doc_["versions"] = {{"vmi", kVersion},
                        {"container_format", 1},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    doc_["seeds"] = nlohmann::json::object();
    doc_["inputs"] = nlohmann::json::array();
}

void Manifest::set_config(const nlohmann::json& config)
{
    doc_["config"] = config;
    doc_["config_sha256"] = sha256_hex(config.dump());
}

void Manifest::add_seed(const std::string& name, std::uint64_t value)
{
    doc_["seeds"][name] = value;
}

void Manifest::add_input(const std::filesystem::path& path)
{
    doc_["inputs"].push_back({{"path", path.generic_string()}, {"sha256", sha256_file(path)}});
}

void Manifest::add_note(const std::string& key, const nlohmann::json& value)
{
    doc_["notes"][key] = value;
}

nlohmann::json Manifest::write(const std::filesystem::path& out_dir) const
{
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(out_dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
            files.push_back(std::filesystem::relative(entry.path(), out_dir));
        }
    }
    std::sort(files.begin(), files.end());
    nlohmann::json doc = doc_;
    auto outputs = nlohmann::json::array();
    for (const auto& rel : files) {
        outputs.push_back({{"path", rel.generic_string()},
                           {"bytes", std::filesystem::file_size(out_dir / rel)},
                           {"sha256", sha256_file(out_dir / rel)}});
    }
    doc["outputs"] = std::move(outputs);
    std::ofstream os(out_dir / "manifest.json", std::ios::binary);
    os << doc.dump(2) << '\n';
    return doc;
}

}  // namespace vmi::harness

#include "vmi/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vmi/error.hpp"

namespace vmi {

namespace {

static_assert(sizeof(float) == 4);

void put_u32_le(std::ostream& os, std::uint32_t v)
{
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(bytes, 4);
}

std::uint32_t get_u32_le(const unsigned char* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t float_bits(float f)
{
    return std::bit_cast<std::uint32_t>(f);
}

}  // namespace

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const float> payload)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw DataError("cannot open for writing: " + path.string());
    }
    const std::string text = header.dump();
    os.write(kContainerMagic, 4);
    os.put(static_cast<char>(kContainerVersion));
    put_u32_le(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));

    std::vector<char> buf(payload.size() * 4);
    for (std::size_t i = 0; i < payload.size(); ++i) {
        const std::uint32_t b = float_bits(payload[i]);
        buf[4 * i + 0] = static_cast<char>(b & 0xff);
        buf[4 * i + 1] = static_cast<char>((b >> 8) & 0xff);
        buf[4 * i + 2] = static_cast<char>((b >> 16) & 0xff);
        buf[4 * i + 3] = static_cast<char>((b >> 24) & 0xff);
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) {
        throw DataError("write failed: " + path.string());
    }
}

Container read_container(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw FormatError("cannot open: " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 9 || !std::equal(kContainerMagic, kContainerMagic + 4, bytes.begin(),
                                        [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
        throw FormatError("bad magic in " + path.string());
    }
    if (bytes[4] != kContainerVersion) {
        throw FormatError("unsupported container version " + std::to_string(bytes[4]));
    }
    const std::uint32_t header_len = get_u32_le(bytes.data() + 5);
    if (9 + static_cast<std::size_t>(header_len) > bytes.size()) {
        throw CorruptionError("header length exceeds file size");
    }
    Container out;
    try {
        out.header = nlohmann::json::parse(bytes.begin() + 9, bytes.begin() + 9 + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }
    if (!out.header.is_object()) {
        throw FormatError("header is not a JSON object");
    }
    const std::size_t payload_bytes = bytes.size() - 9 - header_len;
    if (payload_bytes % 4 != 0) {
        throw CorruptionError("payload is not a whole number of float32 values");
    }
    out.payload.resize(payload_bytes / 4);
    const unsigned char* p = bytes.data() + 9 + header_len;
    for (std::size_t i = 0; i < out.payload.size(); ++i, p += 4) {
        out.payload[i] = std::bit_cast<float>(get_u32_le(p));
    }
    return out;
}

void expect_kind(const nlohmann::json& header, const char* kind)
{
    if (header.contains("kind") && header["kind"] != kind) {
        throw FormatError(std::string("expected container kind '") + kind + "', found " + header["kind"].dump());
    }
}

}  // namespace vmi

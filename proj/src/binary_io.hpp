#pragma once

// Little-endian helpers shared by the DEPB and DEPN containers.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "depara/checksum.hpp"
#include "depara/error.hpp"

namespace depara::detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xffu));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffu));
    }
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

// Fixed 12-byte prefix common to both containers.
struct Prefix {
    std::array<char, 4> magic{};
    std::uint16_t version = 0;
    std::uint16_t flags = 0;
    std::uint32_t meta_len = 0;
};

inline constexpr std::size_t prefix_size = 12;

inline Prefix parse_prefix(const std::uint8_t* p) {
    Prefix out;
    std::memcpy(out.magic.data(), p, 4);
    out.version = get_u16(p + 4);
    out.flags = get_u16(p + 6);
    out.meta_len = get_u32(p + 8);
    return out;
}

inline void write_prefix(std::vector<std::uint8_t>& out, const char (&magic)[5], std::uint16_t version,
                         std::uint32_t meta_len) {
    out.insert(out.end(), magic, magic + 4);
    put_u16(out, version);
    put_u16(out, 0);
    put_u32(out, meta_len);
}

// Cursor over an in-memory byte buffer; every short read is an "unexpected end".
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    const std::uint8_t* take(std::size_t count) {
        if (bytes_.size() - pos_ < count) {
            throw FormatError("unexpected end of stream");
        }
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += count;
        return p;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

inline void read_exact(std::istream& in, std::vector<std::uint8_t>& buf, std::size_t count) {
    const std::size_t old = buf.size();
    buf.resize(old + count);
    in.read(reinterpret_cast<char*>(buf.data() + old), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) {
        if (in.bad()) {
            throw IoError("read failure on source stream");
        }
        throw FormatError("unexpected end of stream");
    }
}

inline void write_all(std::ostream& out, std::span<const std::uint8_t> bytes) {
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failure on destination stream");
    }
}

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

using ::depara::crc32;

} // namespace depara::detail

#pragma once

// JSON metadata helpers for the DEPB and DEPN headers.

#include <cstdint>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "depara/error.hpp"

namespace depara::detail {

inline std::string format_crc(std::uint32_t crc) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "crc32:%08x", crc);
    return buf;
}

inline std::uint32_t parse_crc(const std::string& text) {
    if (text.size() != 14 || text.rfind("crc32:", 0) != 0) {
        throw FormatError("malformed checksum '" + text + "'");
    }
    std::uint32_t value = 0;
    for (std::size_t i = 6; i < text.size(); ++i) {
        const char c = text[i];
        value <<= 4;
        if (c >= '0' && c <= '9') {
            value |= static_cast<std::uint32_t>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
            value |= static_cast<std::uint32_t>(c - 'a' + 10);
        } else {
            throw FormatError("malformed checksum '" + text + "'");
        }
    }
    return value;
}

inline nlohmann::json parse_meta(const std::uint8_t* bytes, std::size_t len) {
    auto meta = nlohmann::json::parse(bytes, bytes + len, nullptr, false);
    if (meta.is_discarded() || !meta.is_object()) {
        throw FormatError("malformed metadata JSON");
    }
    return meta;
}

inline std::string meta_string(const nlohmann::json& meta, const char* key) {
    const auto it = meta.find(key);
    if (it == meta.end() || !it->is_string()) {
        throw FormatError(std::string("metadata field '") + key + "' missing or not a string");
    }
    return it->get<std::string>();
}

inline std::size_t meta_count(const nlohmann::json& meta, const char* key) {
    const auto it = meta.find(key);
    if (it == meta.end() || !it->is_number_unsigned()) {
        throw FormatError(std::string("metadata field '") + key + "' missing or not a count");
    }
    return it->get<std::size_t>();
}

} // namespace depara::detail

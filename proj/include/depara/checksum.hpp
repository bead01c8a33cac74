#pragma once

#include <cstdint>
#include <span>

namespace depara {

/// CRC-32 (IEEE 802.3 polynomial, as used by zlib and PNG).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

} // namespace depara

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "depara/matrix.hpp"

namespace depara {

/// Embeddings and attributions of one (model, layer) over a shared probe set.
/// Row k of both matrices belongs to probe point k.
struct ProbeBundle {
    std::string model_id;
    std::string layer_id;
    std::string probe_id;
    MatrixF embeddings;   // n x d_embed
    MatrixF attributions; // n x d_input

    std::size_t n() const noexcept { return embeddings.rows(); }
    std::size_t d_embed() const noexcept { return embeddings.cols(); }
    std::size_t d_input() const noexcept { return attributions.cols(); }

    friend bool operator==(const ProbeBundle&, const ProbeBundle&) = default;
};

/// Decoded DEPB header. `checksum` is the CRC-32 of the payload bytes.
struct BundleHeader {
    std::uint16_t version = 0;
    std::uint16_t flags = 0;
    std::uint32_t meta_len = 0;
    std::string model_id;
    std::string layer_id;
    std::string probe_id;
    std::size_t n = 0;
    std::size_t d_embed = 0;
    std::size_t d_input = 0;
    std::string dtype;
    std::uint32_t checksum = 0;
};

inline constexpr char bundle_magic[5] = "DEPB";
inline constexpr std::uint16_t bundle_version = 1;

/// Throws ValidationError unless n >= 2, dims >= 1, shapes agree and every value is finite.
void validate_bundle(const ProbeBundle& bundle);

/// Same probe set and same number of probe points.
bool comparable(const ProbeBundle& a, const ProbeBundle& b) noexcept;

/// CRC-32 over the little-endian f32 payload (embeddings then attributions).
std::uint32_t payload_checksum(const ProbeBundle& bundle);

std::vector<std::uint8_t> encode_bundle(const ProbeBundle& bundle);
ProbeBundle decode_bundle(std::span<const std::uint8_t> bytes);

void write_bundle(const ProbeBundle& bundle, std::ostream& out);
ProbeBundle read_bundle(std::istream& in);

/// Header only; the payload is not checked.
BundleHeader peek_bundle_header(std::span<const std::uint8_t> bytes);

void save_bundle(const ProbeBundle& bundle, const std::string& path);
ProbeBundle load_bundle(const std::string& path);

} // namespace depara

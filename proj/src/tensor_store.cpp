#include "depara/tensor_store.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "binary_io.hpp"
#include "meta_util.hpp"

namespace depara {
namespace {

using nlohmann::json;

void check_finite(std::span<const float> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ValidationError(std::string("non-finite value in ") + what + " at flat index " +
                                  std::to_string(i));
        }
    }
}

std::vector<std::uint8_t> encode_payload(const ProbeBundle& b) {
    std::vector<std::uint8_t> payload;
    payload.reserve(4 * (b.embeddings.flat().size() + b.attributions.flat().size()));
    for (float v : b.embeddings.flat()) detail::put_f32(payload, v);
    for (float v : b.attributions.flat()) detail::put_f32(payload, v);
    return payload;
}

std::string bundle_meta(const ProbeBundle& b, std::uint32_t checksum) {
    // nlohmann::json keeps object keys sorted, so the dump is deterministic.
    json meta = {
        {"model_id", b.model_id},
        {"layer_id", b.layer_id},
        {"probe_id", b.probe_id},
        {"n", b.n()},
        {"d_embed", b.d_embed()},
        {"d_input", b.d_input()},
        {"dtype", "f32le"},
        {"checksum", detail::format_crc(checksum)},
    };
    return meta.dump();
}

BundleHeader parse_header(detail::Reader& reader) {
    const auto prefix = detail::parse_prefix(reader.take(detail::prefix_size));
    if (std::string(prefix.magic.data(), 4) != "DEPB") {
        throw FormatError("not a DEPB file");
    }
    if (prefix.version != bundle_version) {
        throw FormatError("unsupported DEPB version " + std::to_string(prefix.version));
    }
    if (prefix.flags != 0) {
        throw FormatError("unsupported DEPB flags " + std::to_string(prefix.flags));
    }
    const auto* meta_bytes = reader.take(prefix.meta_len);
    const json meta = detail::parse_meta(meta_bytes, prefix.meta_len);

    BundleHeader h;
    h.version = prefix.version;
    h.flags = prefix.flags;
    h.meta_len = prefix.meta_len;
    h.model_id = detail::meta_string(meta, "model_id");
    h.layer_id = detail::meta_string(meta, "layer_id");
    h.probe_id = detail::meta_string(meta, "probe_id");
    h.n = detail::meta_count(meta, "n");
    h.d_embed = detail::meta_count(meta, "d_embed");
    h.d_input = detail::meta_count(meta, "d_input");
    h.dtype = detail::meta_string(meta, "dtype");
    h.checksum = detail::parse_crc(detail::meta_string(meta, "checksum"));
    if (h.dtype != "f32le") {
        throw FormatError("unsupported dtype '" + h.dtype + "' (expected f32le)");
    }
    if (h.n < 2 || h.d_embed < 1 || h.d_input < 1) {
        throw FormatError("invalid bundle shape in metadata");
    }
    return h;
}

std::size_t payload_bytes(const BundleHeader& h) {
    const std::size_t floats = h.n * h.d_embed + h.n * h.d_input;
    if (floats / h.n < h.d_embed) {
        throw FormatError("bundle shape overflows");
    }
    return floats * 4;
}

ProbeBundle parse_payload(const BundleHeader& h, const std::uint8_t* payload) {
    const std::size_t size = payload_bytes(h);
    if (detail::crc32({payload, size}) != h.checksum) {
        throw FormatError("corrupt payload (checksum mismatch)");
    }
    ProbeBundle b;
    b.model_id = h.model_id;
    b.layer_id = h.layer_id;
    b.probe_id = h.probe_id;
    b.embeddings = MatrixF(h.n, h.d_embed);
    b.attributions = MatrixF(h.n, h.d_input);
    const std::uint8_t* p = payload;
    for (float& v : b.embeddings.flat()) {
        v = detail::get_f32(p);
        p += 4;
    }
    for (float& v : b.attributions.flat()) {
        v = detail::get_f32(p);
        p += 4;
    }
    try {
        validate_bundle(b);
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }
    return b;
}

} // namespace

void validate_bundle(const ProbeBundle& b) {
    if (b.embeddings.rows() != b.attributions.rows()) {
        throw ValidationError("embeddings and attributions disagree on probe count");
    }
    if (b.n() < 2) {
        throw ValidationError("bundle needs at least 2 probe points (n >= 2)");
    }
    if (b.d_embed() < 1 || b.d_input() < 1) {
        throw ValidationError("bundle dimensions must be >= 1");
    }
    check_finite(b.embeddings.flat(), "embeddings");
    check_finite(b.attributions.flat(), "attributions");
}

bool comparable(const ProbeBundle& a, const ProbeBundle& b) noexcept {
    return a.probe_id == b.probe_id && a.n() == b.n();
}

std::uint32_t payload_checksum(const ProbeBundle& bundle) {
    return detail::crc32(encode_payload(bundle));
}

std::vector<std::uint8_t> encode_bundle(const ProbeBundle& bundle) {
    validate_bundle(bundle);
    const auto payload = encode_payload(bundle);
    const std::string meta = bundle_meta(bundle, detail::crc32(payload));
    std::vector<std::uint8_t> out;
    out.reserve(detail::prefix_size + meta.size() + payload.size());
    detail::write_prefix(out, bundle_magic, bundle_version, static_cast<std::uint32_t>(meta.size()));
    out.insert(out.end(), meta.begin(), meta.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

ProbeBundle decode_bundle(std::span<const std::uint8_t> bytes) {
    detail::Reader reader(bytes);
    const BundleHeader h = parse_header(reader);
    const std::uint8_t* payload = reader.take(payload_bytes(h));
    if (reader.remaining() != 0) {
        throw FormatError("trailing bytes after DEPB payload");
    }
    return parse_payload(h, payload);
}

BundleHeader peek_bundle_header(std::span<const std::uint8_t> bytes) {
    detail::Reader reader(bytes);
    return parse_header(reader);
}

void write_bundle(const ProbeBundle& bundle, std::ostream& out) {
    detail::write_all(out, encode_bundle(bundle));
}

ProbeBundle read_bundle(std::istream& in) {
    std::vector<std::uint8_t> buf;
    detail::read_exact(in, buf, detail::prefix_size);
    const auto prefix = detail::parse_prefix(buf.data());
    if (std::string(prefix.magic.data(), 4) != "DEPB") {
        throw FormatError("not a DEPB file");
    }
    detail::read_exact(in, buf, prefix.meta_len);
    detail::Reader reader(buf);
    const BundleHeader h = parse_header(reader);
    const std::size_t header_len = buf.size();
    detail::read_exact(in, buf, payload_bytes(h));
    return parse_payload(h, buf.data() + header_len);
}

void save_bundle(const ProbeBundle& bundle, const std::string& path) {
    detail::write_file(path, encode_bundle(bundle));
}

ProbeBundle load_bundle(const std::string& path) {
    const auto bytes = detail::read_file(path);
    return decode_bundle(bytes);
}

} // namespace depara

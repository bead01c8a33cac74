#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "depara/tensor_store.hpp"
#include "oracles.hpp"

using namespace depara;

namespace {

ProbeBundle tiny_bundle() {
    ProbeBundle b;
    b.model_id = "m";
    b.layer_id = "l";
    b.probe_id = "p";
    b.embeddings = MatrixF(2, 1, std::vector<float>{1.0f, 2.0f});
    b.attributions = MatrixF(2, 1, std::vector<float>{0.0f, 0.0f});
    return b;
}

std::string error_of(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_bundle(bytes);
    } catch (const FormatError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("tensor_store") {

TEST_CASE("tiny bundle has the documented layout and round-trips") {
    const ProbeBundle b = tiny_bundle();
    const auto bytes = encode_bundle(b);
    const BundleHeader h = peek_bundle_header(bytes);
    CHECK(bytes.size() == 4 + 2 + 2 + 4 + h.meta_len + 8 + 8);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DEPB");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 0);
    CHECK(bytes[7] == 0);
    CHECK(h.dtype == "f32le");
    CHECK(h.n == 2);
    CHECK(h.checksum == payload_checksum(b));
    // 1.0f = 0x3f800000 little-endian right after the metadata
    const std::size_t payload = 12 + h.meta_len;
    CHECK(bytes[payload + 0] == 0x00);
    CHECK(bytes[payload + 3] == 0x3f);
    CHECK(oracle::bitwise_equal(decode_bundle(bytes), b));
}

TEST_CASE("writing is deterministic") {
    std::ostringstream first;
    std::ostringstream second;
    write_bundle(tiny_bundle(), first);
    write_bundle(tiny_bundle(), second);
    CHECK(first.str() == second.str());
}

TEST_CASE("non-finite values are rejected before writing") {
    ProbeBundle b = tiny_bundle();
    b.embeddings(1, 0) = std::numeric_limits<float>::quiet_NaN();
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(write_bundle(b, out), doctest::Contains("non-finite value"), ValidationError);
    CHECK(out.str().empty());

    b = tiny_bundle();
    b.attributions(0, 0) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(encode_bundle(b), ValidationError);
}

TEST_CASE("shape invariants") {
    ProbeBundle b = tiny_bundle();
    b.embeddings = MatrixF(1, 1, std::vector<float>{1.0f});
    b.attributions = MatrixF(1, 1, std::vector<float>{1.0f});
    CHECK_THROWS_AS(validate_bundle(b), ValidationError);

    b = tiny_bundle();
    b.attributions = MatrixF(3, 1);
    CHECK_THROWS_AS(validate_bundle(b), ValidationError);
}

TEST_CASE("stream round-trip over random bundles") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const auto b = oracle::random_bundle(rng, 2 + rng() % 10, 1 + rng() % 6, 1 + rng() % 9);
        std::stringstream io;
        write_bundle(b, io);
        CHECK(oracle::bitwise_equal(read_bundle(io), b));
    }
}

TEST_CASE("bad magic") {
    auto bytes = encode_bundle(tiny_bundle());
    bytes[0] = 'X';
    bytes[1] = 'X';
    bytes[2] = 'X';
    bytes[3] = 'X';
    CHECK(error_of(bytes) == "not a DEPB file");
    std::stringstream io(std::string(bytes.begin(), bytes.end()));
    CHECK_THROWS_WITH_AS(read_bundle(io), "not a DEPB file", FormatError);
}

TEST_CASE("flipped payload bit is reported as corrupt") {
    auto bytes = encode_bundle(tiny_bundle());
    bytes[bytes.size() - 9] ^= 0x10;
    CHECK(error_of(bytes).find("corrupt payload") == 0);
}

TEST_CASE("truncation anywhere is an unexpected end") {
    const auto bytes = encode_bundle(tiny_bundle());
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{11}, std::size_t{20}, bytes.size() - 1}) {
        std::vector<std::uint8_t> shortened(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        CHECK(error_of(shortened).find("unexpected end") == 0);
        std::stringstream io(std::string(shortened.begin(), shortened.end()));
        CHECK_THROWS_WITH_AS(read_bundle(io), doctest::Contains("unexpected end"), FormatError);
    }
}

TEST_CASE("header fields are validated") {
    auto bytes = encode_bundle(tiny_bundle());
    auto v2 = bytes;
    v2[4] = 2;
    CHECK(error_of(v2).find("unsupported DEPB version") == 0);
    auto flagged = bytes;
    flagged[6] = 1;
    CHECK(error_of(flagged).find("unsupported DEPB flags") == 0);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(error_of(trailing).find("trailing bytes") == 0);
}

TEST_CASE("every single-byte payload corruption is detected") {
    std::mt19937_64 rng(99);
    const auto b = oracle::random_bundle(rng, 6, 4, 5);
    const auto bytes = encode_bundle(b);
    const std::size_t payload = 12 + peek_bundle_header(bytes).meta_len;
    for (std::size_t pos = payload; pos < bytes.size(); ++pos) {
        auto bad = bytes;
        bad[pos] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        CHECK(error_of(bad).find("corrupt payload") == 0);
    }
}

TEST_CASE("comparability") {
    ProbeBundle a = tiny_bundle();
    ProbeBundle b = tiny_bundle();
    CHECK(comparable(a, b));
    b.probe_id = "other";
    CHECK_FALSE(comparable(a, b));
}

}

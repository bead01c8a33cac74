#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "depara/refnet.hpp"
#include "depara/tensor_store.hpp"
#include "depara/transferability.hpp"
#include "oracles.hpp"

using namespace depara;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("depara-cli-" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

RefNet identity_net() {
    DenseLayer layer;
    layer.weights = MatrixF(2, 2, std::vector<float>{1, 0, 0, 1});
    layer.bias = {0, 0};
    return RefNet({layer});
}

// Four bundles on one probe: a and b nearly identical, c and d nearly identical.
void write_two_block_fixture(const TempDir& dir) {
    std::mt19937_64 rng(1);
    const auto base1 = oracle::random_bundle(rng, 12, 4, 6);
    const auto base2 = oracle::random_bundle(rng, 12, 4, 6);
    std::normal_distribution<float> jitter(0.0f, 0.01f);
    const auto near = [&](ProbeBundle b) {
        for (float& v : b.embeddings.flat()) v += jitter(rng);
        for (float& v : b.attributions.flat()) v += jitter(rng);
        return b;
    };
    fs::create_directories(dir.path / "pool");
    save_bundle(base1, dir / "pool/a.depb");
    save_bundle(near(base1), dir / "pool/b.depb");
    save_bundle(base2, dir / "pool/c.depb");
    save_bundle(near(base2), dir / "pool/d.depb");
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == cli::exit_usage);
    CHECK(run({"no-such-command"}).code == cli::exit_usage);
    CHECK(run({"compare", "--a", "/nonexistent.depb", "--b", "/nonexistent.depb"}).code == cli::exit_usage);
    CHECK(run({"--help"}).code == cli::exit_ok);
}

TEST_CASE("export-ref writes the bundle refnet produces") {
    TempDir dir("export");
    save_refnet(identity_net(), dir / "id.depn");
    write_text(dir / "probe.csv", "1,0\n0,1\n");
    const auto r = run({"export-ref", "--net", dir / "id.depn", "--probe", dir / "probe.csv", "--tap", "1", "--out",
                        dir / "out.depb", "--probe-id", "p"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["n"] == 2);
    CHECK(j["d_embed"] == 2);
    CHECK(j["d_input"] == 2);

    ProbeBundle expected;
    expected.model_id = "id";
    expected.layer_id = "tap-1";
    expected.probe_id = "p";
    expected.embeddings = MatrixF(2, 2, std::vector<float>{1, 0, 0, 1});
    expected.attributions = MatrixF(2, 2, std::vector<float>{2, 0, 0, 2});
    std::ifstream in(dir / "out.depb", std::ios::binary);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes == encode_bundle(expected));
    char crc[16];
    std::snprintf(crc, sizeof crc, "crc32:%08x", payload_checksum(expected));
    CHECK(j["checksum"] == crc);
}

TEST_CASE("export-ref validation") {
    TempDir dir("export-bad");
    save_refnet(identity_net(), dir / "id.depn");
    write_text(dir / "probe.csv", "1,0\n0,1\n");
    write_text(dir / "bad.csv", "hello,world\n");
    write_text(dir / "ragged.csv", "1,2\n3\n");
    const auto tap = run({"export-ref", "--net", dir / "id.depn", "--probe", dir / "probe.csv", "--tap", "3",
                          "--out", dir / "o.depb"});
    CHECK(tap.code == 2);
    CHECK(tap.err.find("tap out of range") != std::string::npos);
    for (const char* probe : {"bad.csv", "ragged.csv"}) {
        const auto r = run({"export-ref", "--net", dir / "id.depn", "--probe", dir / probe, "--tap", "1", "--out",
                            dir / "o.depb"});
        CHECK(r.code == 2);
        CHECK(r.err.find(probe) != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / "o.depb"));
}

TEST_CASE("default probe ids match for the same probe values") {
    TempDir dir("probe-id");
    save_refnet(identity_net(), dir / "id.depn");
    write_text(dir / "p1.csv", "1,0\n0,1\n");
    write_text(dir / "p2.csv", "1.0, 0.0\n0.0, 1.0\n");
    REQUIRE(run({"export-ref", "--net", dir / "id.depn", "--probe", dir / "p1.csv", "--tap", "1", "--out",
                 dir / "a.depb"})
                .code == 0);
    REQUIRE(run({"export-ref", "--net", dir / "id.depn", "--probe", dir / "p2.csv", "--tap", "1", "--out",
                 dir / "b.depb"})
                .code == 0);
    CHECK(load_bundle(dir / "a.depb").probe_id == load_bundle(dir / "b.depb").probe_id);
}

TEST_CASE("compare") {
    TempDir dir("compare");
    write_two_block_fixture(dir);
    const auto self = run({"compare", "--a", dir / "pool/a.depb", "--b", dir / "pool/a.depb", "--lambda", "1"});
    REQUIRE(self.code == 0);
    auto j = nlohmann::ordered_json::parse(self.out);
    CHECK(j["score"] == 2.0);
    CHECK(j.begin().key() == "s_nodes");

    const auto zero = run({"compare", "--a", dir / "pool/a.depb", "--b", dir / "pool/c.depb", "--lambda", "0"});
    j = nlohmann::json::parse(zero.out);
    CHECK(j["score"] == j["s_nodes"]);

    std::mt19937_64 rng(2);
    save_bundle(oracle::random_bundle(rng, 12, 4, 6, "other-probe"), dir / "other.depb");
    const auto bad = run({"compare", "--a", dir / "pool/a.depb", "--b", dir / "other.depb"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("incomparable graphs") != std::string::npos);

    CHECK(run({"compare", "--a", dir / "pool/a.depb", "--b", dir / "pool/a.depb", "--lambda", "-1"}).code == 2);

    // corrupt file: error names the file
    auto bytes = encode_bundle(load_bundle(dir / "pool/a.depb"));
    bytes.back() ^= 0xff;
    std::ofstream(dir / "corrupt.depb", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                                 static_cast<std::streamsize>(bytes.size()));
    const auto corrupt = run({"compare", "--a", dir / "corrupt.depb", "--b", dir / "pool/a.depb"});
    CHECK(corrupt.code == 2);
    CHECK(corrupt.err.find("corrupt.depb") != std::string::npos);
}

TEST_CASE("rank puts the target's own file first") {
    TempDir dir("rank");
    write_two_block_fixture(dir);
    const auto r = run({"rank", "--target", dir / "pool/c.depb", "--candidates", dir / "pool"});
    REQUIRE(r.code == 0);
    const auto table = ranking_from_json(nlohmann::json::parse(r.out));
    CHECK(table.target_id == "c");
    CHECK(table.entries[0].candidate_id == "c");
    CHECK(table.entries[1].candidate_id == "d");

    const auto csv = run({"rank", "--target", dir / "pool/c.depb", "--candidates", dir / "pool", "--format", "csv"});
    CHECK(csv.out.rfind("rank,candidate_id,score,tied\n1,c,2,false\n", 0) == 0);

    // byte-identical output on repeat
    CHECK(run({"rank", "--target", dir / "pool/c.depb", "--candidates", dir / "pool"}).out == r.out);

    fs::create_directories(dir.path / "empty");
    CHECK(run({"rank", "--target", dir / "pool/c.depb", "--candidates", dir / "empty"}).code == 2);
}

TEST_CASE("select-layer") {
    TempDir dir("select");
    std::mt19937_64 rng(3);
    const RefNet net = oracle::random_net(rng, 3, 8, false, false, 4);
    const MatrixD probe = oracle::random_probe(rng, 10, net.input_dim());
    fs::create_directories(dir.path / "layers");
    for (std::size_t k = 1; k <= 3; ++k) {
        save_bundle(export_bundle(net, probe, LayerTap{k}, {"m", "tap-" + std::to_string(k), "p"}),
                    dir / ("layers/tap-" + std::to_string(k) + ".depb"));
    }
    save_bundle(export_bundle(net, probe, LayerTap{2}, {"t", "enc", "p"}), dir / "target.depb");
    const auto r = run({"select-layer", "--layers", dir / "layers", "--target-encoder", dir / "target.depb"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["selected"] == "tap-2");
    CHECK(j["tie"] == false);
}

TEST_CASE("eval on the six-candidate fixture") {
    TempDir dir("eval");
    const auto table = make_ranking(
        "q", {{"c1", 0.9}, {"c2", 0.8}, {"c3", 0.7}, {"c4", 0.6}, {"c5", 0.5}, {"c6", 0.4}},
        RankDirection::descending_by_score);
    write_text(dir / "r.json", to_json(table).dump());
    write_text(dir / "rel.json", R"({"q": ["c1", "c2", "c3", "c5", "c6"]})");
    const auto r = run({"eval", "--rankings", dir / "r.json", "--relevance", dir / "rel.json", "--k", "5", "--svg",
                        dir / "pr.svg"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["queries"][0]["hits"] == 4);
    CHECK(j["queries"][0]["precision_at_k"] == 0.8);
    CHECK(j["queries"][0]["recall_at_k"] == 0.8);
    CHECK(j["pr_curve"].size() == 6);
    CHECK(fs::exists(dir / "pr.svg"));

    CHECK(run({"eval", "--rankings", dir / "r.json", "--relevance", dir / "rel.json", "--k", "7"}).code == 2);
    write_text(dir / "rel2.json", R"({"other": ["c1"]})");
    CHECK(run({"eval", "--rankings", dir / "r.json", "--relevance", dir / "rel2.json", "--k", "1"}).code == 2);
    const auto csv = run({"eval", "--rankings", dir / "r.json", "--relevance", dir / "rel.json", "--k", "1",
                          "--format", "csv"});
    CHECK(csv.out.rfind("k,precision,recall\n", 0) == 0);
}

TEST_CASE("tree separates the two blocks") {
    TempDir dir("tree");
    write_two_block_fixture(dir);
    const auto r = run({"tree", "--bundles", dir / "pool", "--newick"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("((a:", 0) == 0);
    CHECK(r.out.find(",(c:") != std::string::npos);
    const auto j = nlohmann::json::parse(run({"tree", "--bundles", dir / "pool"}).out);
    CHECK(j["leaves"].size() == 4);
    CHECK(j["similarity"]["ids"][0] == "a");
    const auto csv = run({"tree", "--bundles", dir / "pool", "--format", "csv"});
    CHECK(csv.out.rfind("id,a,b,c,d\n", 0) == 0);
}

TEST_CASE("synth") {
    TempDir dir("synth");
    const auto r = run({"synth", "--seed", "5", "--sigmas", "0", "1", "--d-input", "8", "--d-embed", "2",
                        "--n-probe", "10", "--out", dir.path.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["scores"][0]["sigma"] == 0.0);
    CHECK(j["scores"][0]["median_score"] == 2.0);
    CHECK(j["scores"][1]["median_score"].get<double>() < 2.0);
    CHECK(fs::exists(dir / "family-5/variant-1/bundle.depb"));
    CHECK(run({"synth", "--seed", "5", "--d-input", "2", "--d-embed", "4"}).code == 2);
}

}

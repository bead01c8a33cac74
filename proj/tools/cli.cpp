#include "cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "depara/checksum.hpp"
#include "depara/evaluation.hpp"
#include "depara/graph.hpp"
#include "depara/refnet.hpp"
#include "depara/report_format.hpp"
#include "depara/similarity.hpp"
#include "depara/synthbench.hpp"
#include "depara/tensor_store.hpp"
#include "depara/transferability.hpp"

namespace depara::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Re-raises the in-flight depara error with the offending file prepended,
// keeping its category so the exit code is unchanged.
[[noreturn]] void rethrow_for(const std::string& path) {
    try {
        throw;
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

template <typename F>
auto with_file(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        rethrow_for(path);
    }
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

DeparaGraph load_graph(const std::string& path) {
    return with_file(path, [&] { return build_graph(load_bundle(path)); });
}

std::vector<std::string> list_bundles(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".depb") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end(), [](const std::string& a, const std::string& b) {
        return fs::path(a).filename().string() < fs::path(b).filename().string();
    });
    if (files.empty()) {
        throw ValidationError(dir + ": no .depb files found");
    }
    return files;
}

KnowledgePool load_pool(const std::string& dir) {
    KnowledgePool pool;
    for (const auto& file : list_bundles(dir)) pool.items.push_back({stem(file), load_graph(file)});
    return pool;
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError(path + ": not valid JSON");
    return j;
}

MatrixD parse_probe_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t count = 0;
        std::stringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) {
            const char* begin = field.c_str();
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(begin, &end);
            while (*end == ' ' || *end == '\t') ++end;
            if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
                throw ValidationError(path + ": line " + std::to_string(line_no) + " is not numeric CSV");
            }
            values.push_back(v);
            ++count;
        }
        if (!line.empty() && line.back() == ',') {
            throw ValidationError(path + ": line " + std::to_string(line_no) + " has an empty field");
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw ValidationError(path + ": line " + std::to_string(line_no) + " has " + std::to_string(count) +
                                  " fields, expected " + std::to_string(cols));
        }
        ++rows;
    }
    if (rows == 0) throw ValidationError(path + ": probe CSV is empty");
    return MatrixD(rows, cols, std::move(values));
}

// Same probe values give the same id, whatever the CSV formatting.
std::string probe_digest(const MatrixD& probe) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(probe.flat().size() * 8 + 16);
    const auto put = [&](std::uint64_t v) {
        for (int s = 0; s < 64; s += 8) bytes.push_back(static_cast<std::uint8_t>(v >> s));
    };
    put(probe.rows());
    put(probe.cols());
    for (double v : probe.flat()) put(std::bit_cast<std::uint64_t>(v));
    char buf[32];
    std::snprintf(buf, sizeof buf, "probe-%08x", crc32(bytes));
    return buf;
}

void emit(std::ostream& out, const ojson& j) { out << j.dump(2) << '\n'; }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path + ": cannot open for writing");
    f << text;
    if (!f) throw IoError(path + ": write failure");
}

struct Options {
    std::string format = "json";
    double lambda = 1.0;
    bool edges_only = false;

    // export-ref
    std::string net;
    std::string probe;
    std::size_t tap = 0;
    std::string out_file;
    std::string model_id;
    std::string layer_id;
    std::string probe_id;

    // compare
    std::string a;
    std::string b;

    // rank / select-layer / tree
    std::string target;
    std::string candidates;
    std::string layers;
    std::string target_encoder;
    std::string bundles;
    bool newick_only = false;

    // eval
    std::string rankings;
    std::string relevance;
    std::size_t k = 0;
    std::string svg;

    // synth
    std::uint64_t seed = 0;
    std::vector<double> sigmas{0.0, 0.05, 0.2, 1.0};
    std::size_t seed_count = 1;
    std::size_t d_input = 32;
    std::size_t d_embed = 8;
    std::size_t n_probe = 64;
    std::string out_dir;
};

NodeTerm node_term(const Options& o) { return o.edges_only ? NodeTerm::omit : NodeTerm::required; }

int cmd_export_ref(const Options& o, std::ostream& out) {
    const RefNet net = with_file(o.net, [&] { return load_refnet(o.net); });
    const MatrixD probe = parse_probe_csv(o.probe);
    if (o.tap < 1 || o.tap > net.depth()) {
        throw ValidationError("tap out of range: " + std::to_string(o.tap) + " (network has " +
                              std::to_string(net.depth()) + " layers)");
    }
    BundleIds ids;
    ids.model_id = o.model_id.empty() ? stem(o.net) : o.model_id;
    ids.layer_id = o.layer_id.empty() ? "tap-" + std::to_string(o.tap) : o.layer_id;
    ids.probe_id = o.probe_id.empty() ? probe_digest(probe) : o.probe_id;
    const ProbeBundle bundle = with_file(o.probe, [&] { return export_bundle(net, probe, LayerTap{o.tap}, ids); });
    save_bundle(bundle, o.out_file);

    ojson j;
    j["out"] = o.out_file;
    j["model_id"] = bundle.model_id;
    j["layer_id"] = bundle.layer_id;
    j["probe_id"] = bundle.probe_id;
    j["n"] = bundle.n();
    j["d_embed"] = bundle.d_embed();
    j["d_input"] = bundle.d_input();
    char crc[16];
    std::snprintf(crc, sizeof crc, "crc32:%08x", payload_checksum(bundle));
    j["checksum"] = crc;
    emit(out, j);
    return exit_ok;
}

int cmd_compare(const Options& o, std::ostream& out) {
    const DeparaGraph a = load_graph(o.a);
    const DeparaGraph b = load_graph(o.b);
    emit(out, to_json(graph_similarity(a, b, o.lambda, node_term(o))));
    return exit_ok;
}

int cmd_rank(const Options& o, std::ostream& out) {
    const DeparaGraph target = load_graph(o.target);
    const KnowledgePool pool = load_pool(o.candidates);
    RankingTable table = rank_by_similarity(pool, target, o.lambda, node_term(o));
    table.target_id = stem(o.target);
    if (o.format == "csv") {
        out << to_csv(table);
    } else {
        emit(out, to_json(table));
    }
    return exit_ok;
}

int cmd_select_layer(const Options& o, std::ostream& out) {
    const DeparaGraph target = load_graph(o.target_encoder);
    const KnowledgePool pool = load_pool(o.layers);
    LayerSelection sel = select_layer(pool, target, o.lambda, node_term(o));
    sel.ranking.target_id = stem(o.target_encoder);
    if (o.format == "csv") {
        out << to_csv(sel.ranking);
        return exit_ok;
    }
    ojson j;
    j["selected"] = sel.candidate_id;
    j["score"] = round_sig9(sel.score);
    j["tie"] = sel.tie;
    j["ranking"] = to_json(sel.ranking);
    emit(out, j);
    return exit_ok;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const auto rankings_json = load_json(o.rankings);
    std::vector<RankingTable> rankings;
    with_file(o.rankings, [&] {
        if (rankings_json.is_array()) {
            for (const auto& r : rankings_json) rankings.push_back(ranking_from_json(r));
        } else {
            rankings.push_back(ranking_from_json(rankings_json));
        }
        if (rankings.empty()) throw ValidationError("no rankings");
        return 0;
    });
    const auto rels = with_file(o.relevance, [&] { return relevance_from_json(load_json(o.relevance)); });

    const PrCurve curve = pr_curve(rankings, rels);
    if (!o.svg.empty()) write_text(o.svg, to_svg(curve));
    if (o.format == "csv") {
        out << to_csv(curve);
        return exit_ok;
    }

    ojson j;
    j["k"] = o.k;
    auto queries = ojson::array();
    double p_sum = 0.0;
    double r_sum = 0.0;
    for (const RankingTable& table : rankings) {
        const auto rel = std::find_if(rels.begin(), rels.end(),
                                      [&](const RelevanceSet& r) { return r.query_id == table.target_id; });
        ojson q;
        q["query_id"] = table.target_id;
        q["hits"] = hits_at_k(table, *rel, o.k);
        const double p = precision_at_k(table, *rel, o.k);
        const double r = recall_at_k(table, *rel, o.k);
        q["precision_at_k"] = round_sig9(p);
        q["recall_at_k"] = round_sig9(r);
        queries.push_back(std::move(q));
        p_sum += p;
        r_sum += r;
    }
    j["queries"] = std::move(queries);
    j["mean_precision_at_k"] = round_sig9(p_sum / static_cast<double>(rankings.size()));
    j["mean_recall_at_k"] = round_sig9(r_sum / static_cast<double>(rankings.size()));
    auto points = ojson::array();
    for (const PrPoint& pt : curve.points) {
        ojson row;
        row["k"] = pt.k;
        row["precision"] = round_sig9(pt.precision);
        row["recall"] = round_sig9(pt.recall);
        points.push_back(std::move(row));
    }
    j["pr_curve"] = std::move(points);
    emit(out, j);
    return exit_ok;
}

int cmd_tree(const Options& o, std::ostream& out) {
    const KnowledgePool pool = load_pool(o.bundles);
    std::vector<std::string> ids;
    for (const auto& item : pool.items) ids.push_back(item.candidate_id);
    const MatrixD m = all_pairs_matrix(pool, o.lambda, node_term(o));
    if (o.format == "csv") {
        out << matrix_to_csv(m, ids);
        return exit_ok;
    }
    const Dendrogram tree = task_tree(m, ids, o.lambda);
    if (o.newick_only) {
        out << to_newick(tree) << '\n';
        return exit_ok;
    }
    ojson j = to_json(tree);
    j["similarity"] = matrix_to_json(m, ids);
    emit(out, j);
    return exit_ok;
}

int cmd_synth(const Options& o, std::ostream& out) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < o.seed_count; ++i) seeds.push_back(o.seed + i);
    const auto medians = median_sweep(seeds, o.d_input, o.d_embed, o.n_probe, o.sigmas, o.lambda);

    ojson j;
    j["seed"] = o.seed;
    j["seeds"] = o.seed_count;
    j["lambda"] = round_sig9(o.lambda);
    j["ground_truth"] = "perturbation magnitude (synthetic proxy)";
    auto rows = ojson::array();
    for (const SigmaScore& s : medians) {
        ojson row;
        row["sigma"] = round_sig9(s.sigma);
        row["median_score"] = round_sig9(s.score);
        rows.push_back(std::move(row));
    }
    j["scores"] = std::move(rows);
    if (!o.out_dir.empty()) {
        auto dirs = ojson::array();
        for (std::uint64_t seed : seeds) {
            const SynthFamily family = generate_family(seed, o.d_input, o.d_embed, o.n_probe, o.sigmas);
            try {
                dirs.push_back(write_family(family, o.out_dir));
            } catch (const fs::filesystem_error& e) {
                throw IoError(e.what());
            }
        }
        j["family_dirs"] = std::move(dirs);
    }
    emit(out, j);
    return exit_ok;
}

void add_lambda(CLI::App* cmd, Options& o) {
    cmd->add_option("--lambda", o.lambda, "trade-off weight of the edge term")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

void add_format(CLI::App* cmd, Options& o) {
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
}

void add_edges_only(CLI::App* cmd, Options& o) {
    cmd->add_flag("--edges-only", o.edges_only, "skip the node term (graphs with different input spaces)");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"DEPARA transferability toolkit", "depara"};
    app.require_subcommand(1, 1);

    auto* export_ref = app.add_subcommand("export-ref", "run a reference network over a probe CSV, write a DEPB bundle");
    export_ref->add_option("--net", o.net, "DEPN network file")->required()->check(CLI::ExistingFile);
    export_ref->add_option("--probe", o.probe, "probe CSV, one point per row")->required()->check(CLI::ExistingFile);
    export_ref->add_option("--tap", o.tap, "1-based layer whose output is the embedding")->required();
    export_ref->add_option("--out", o.out_file, "output .depb path")->required();
    export_ref->add_option("--model-id", o.model_id, "defaults to the network file stem");
    export_ref->add_option("--layer-id", o.layer_id, "defaults to tap-<K>");
    export_ref->add_option("--probe-id", o.probe_id, "defaults to a digest of the probe values");

    auto* compare = app.add_subcommand("compare", "similarity report between two bundles");
    compare->add_option("--a", o.a)->required()->check(CLI::ExistingFile);
    compare->add_option("--b", o.b)->required()->check(CLI::ExistingFile);
    add_lambda(compare, o);
    add_edges_only(compare, o);

    auto* rank = app.add_subcommand("rank", "rank candidate bundles by similarity to a target");
    rank->add_option("--target", o.target)->required()->check(CLI::ExistingFile);
    rank->add_option("--candidates", o.candidates, "directory of .depb files")
        ->required()
        ->check(CLI::ExistingDirectory);
    add_lambda(rank, o);
    add_format(rank, o);
    add_edges_only(rank, o);

    auto* select = app.add_subcommand("select-layer", "pick the source layer most similar to a target encoder");
    select->add_option("--layers", o.layers, "directory of per-layer .depb files")
        ->required()
        ->check(CLI::ExistingDirectory);
    select->add_option("--target-encoder", o.target_encoder)->required()->check(CLI::ExistingFile);
    add_lambda(select, o);
    add_format(select, o);
    add_edges_only(select, o);

    auto* eval = app.add_subcommand("eval", "P@K, R@K and PR curve against relevance sets");
    eval->add_option("--rankings", o.rankings, "ranking JSON (object or array)")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--relevance", o.relevance, "relevance JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--k", o.k)->required()->check(CLI::PositiveNumber);
    eval->add_option("--svg", o.svg, "also write the PR curve as SVG");
    add_format(eval, o);

    auto* tree = app.add_subcommand("tree", "average-linkage task similarity tree");
    tree->add_option("--bundles", o.bundles, "directory of .depb files")
        ->required()
        ->check(CLI::ExistingDirectory);
    tree->add_flag("--newick", o.newick_only, "print only the Newick string");
    add_lambda(tree, o);
    add_format(tree, o);
    add_edges_only(tree, o);

    auto* synth = app.add_subcommand("synth", "synthetic family benchmark: median score vs noise level");
    synth->add_option("--seed", o.seed)->required();
    synth->add_option("--sigmas", o.sigmas)->capture_default_str();
    synth->add_option("--seeds", o.seed_count, "consecutive seeds to take the median over")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--d-input", o.d_input)->capture_default_str();
    synth->add_option("--d-embed", o.d_embed)->capture_default_str();
    synth->add_option("--n-probe", o.n_probe)->capture_default_str();
    synth->add_option("--out", o.out_dir, "write family-<seed>/variant-<sigma>/ layout here");
    add_lambda(synth, o);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    try {
        if (*export_ref) return cmd_export_ref(o, out);
        if (*compare) return cmd_compare(o, out);
        if (*rank) return cmd_rank(o, out);
        if (*select) return cmd_select_layer(o, out);
        if (*eval) return cmd_eval(o, out);
        if (*tree) return cmd_tree(o, out);
        if (*synth) return cmd_synth(o, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_usage;
}

} // namespace depara::cli

#include "depara/transferability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "depara/parallel.hpp"
#include "depara/report_format.hpp"

namespace depara {
namespace {

void check_pool(const KnowledgePool& pool, const DeparaGraph& reference) {
    if (pool.items.empty()) {
        throw ValidationError("empty knowledge pool");
    }
    for (const PoolItem& item : pool.items) {
        if (item.graph.probe_id != reference.probe_id || item.graph.n() != reference.n()) {
            throw ValidationError("incomparable graphs: candidate '" + item.candidate_id +
                                  "' was built on a different probe set");
        }
    }
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string_view to_string(RankDirection d) noexcept {
    return d == RankDirection::descending_by_score ? "descending_by_score" : "ascending_by_risk";
}

RankingTable make_ranking(std::string target_id, std::vector<ScoredCandidate> scored, RankDirection direction) {
    if (scored.empty()) {
        throw ValidationError("cannot rank an empty candidate list");
    }
    for (const auto& [id, value] : scored) {
        if (!std::isfinite(value)) {
            throw ValidationError("non-finite value for candidate '" + id + "'");
        }
    }
    const bool descending = direction == RankDirection::descending_by_score;
    const auto better = [descending](double x, double y) { return descending ? x > y : x < y; };
    std::stable_sort(scored.begin(), scored.end(),
                     [&](const ScoredCandidate& a, const ScoredCandidate& b) { return better(a.second, b.second); });

    RankingTable table;
    table.target_id = std::move(target_id);
    table.direction = direction;
    table.entries.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        RankingEntry e;
        e.candidate_id = std::move(scored[i].first);
        e.score = scored[i].second;
        const bool same_as_prev = i > 0 && scored[i - 1].second == e.score;
        e.rank = same_as_prev ? table.entries.back().rank : i + 1;
        e.tied = same_as_prev || (i + 1 < scored.size() && scored[i + 1].second == e.score);
        table.entries.push_back(std::move(e));
    }
    return table;
}

RankingTable rank_by_similarity(const KnowledgePool& pool, const DeparaGraph& target, double lambda,
                                NodeTerm node_term) {
    check_pool(pool, target);
    std::vector<ScoredCandidate> scored(pool.items.size());
    parallel_for(pool.items.size(), [&](std::size_t i) {
        const PoolItem& item = pool.items[i];
        try {
            scored[i] = {item.candidate_id, graph_similarity(item.graph, target, lambda, node_term).score};
        } catch (const ValidationError& e) {
            throw ValidationError("candidate '" + item.candidate_id + "': " + e.what());
        }
    });
    std::string target_id = target.model_id;
    if (!target.layer_id.empty()) target_id += "/" + target.layer_id;
    return make_ranking(std::move(target_id), std::move(scored), RankDirection::descending_by_score);
}

RankingTable rank_by_risk(std::vector<ScoredCandidate> risks, std::string target_id) {
    return make_ranking(std::move(target_id), std::move(risks), RankDirection::ascending_by_risk);
}

LayerSelection select_layer(const KnowledgePool& layers, const DeparaGraph& target_encoder, double lambda,
                            NodeTerm node_term) {
    LayerSelection out;
    out.ranking = rank_by_similarity(layers, target_encoder, lambda, node_term);
    const RankingEntry& best = out.ranking.entries.front();
    out.candidate_id = best.candidate_id;
    out.score = best.score;
    out.tie = best.tied;
    return out;
}

MatrixD all_pairs_matrix(const KnowledgePool& pool, double lambda, NodeTerm node_term) {
    if (pool.items.empty()) {
        throw ValidationError("empty knowledge pool");
    }
    check_pool(pool, pool.items.front().graph);
    const std::size_t n = pool.items.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
    }
    MatrixD m(n, n);
    parallel_for(pairs.size(), [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        const double s = graph_similarity(pool.items[i].graph, pool.items[j].graph, lambda, node_term).score;
        m(i, j) = s;
        m(j, i) = s;
    });
    return m;
}

nlohmann::ordered_json to_json(const RankingTable& table) {
    nlohmann::ordered_json out;
    out["target_id"] = table.target_id;
    out["direction"] = to_string(table.direction);
    auto entries = nlohmann::ordered_json::array();
    for (const RankingEntry& e : table.entries) {
        nlohmann::ordered_json row;
        row["candidate_id"] = e.candidate_id;
        row["score"] = round_sig9(e.score);
        row["rank"] = e.rank;
        row["tied"] = e.tied;
        entries.push_back(std::move(row));
    }
    out["entries"] = std::move(entries);
    return out;
}

RankingTable ranking_from_json(const nlohmann::json& j) {
    try {
        RankingTable table;
        table.target_id = j.at("target_id").get<std::string>();
        const auto direction = j.at("direction").get<std::string>();
        if (direction == "descending_by_score") {
            table.direction = RankDirection::descending_by_score;
        } else if (direction == "ascending_by_risk") {
            table.direction = RankDirection::ascending_by_risk;
        } else {
            throw ValidationError("unknown ranking direction '" + direction + "'");
        }
        for (const auto& row : j.at("entries")) {
            RankingEntry e;
            e.candidate_id = row.at("candidate_id").get<std::string>();
            e.score = row.at("score").get<double>();
            e.rank = row.at("rank").get<std::size_t>();
            e.tied = row.value("tied", false);
            table.entries.push_back(std::move(e));
        }
        if (table.entries.empty()) {
            throw ValidationError("ranking for '" + table.target_id + "' has no entries");
        }
        return table;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed ranking JSON: ") + e.what());
    }
}

std::string to_csv(const RankingTable& table) {
    std::ostringstream out;
    out << "rank,candidate_id,score,tied\n";
    for (const RankingEntry& e : table.entries) {
        out << e.rank << ',' << csv_field(e.candidate_id) << ',' << format_sig9(e.score) << ','
            << (e.tied ? "true" : "false") << '\n';
    }
    return out.str();
}

nlohmann::ordered_json matrix_to_json(const MatrixD& m, const std::vector<std::string>& ids) {
    nlohmann::ordered_json out;
    out["ids"] = ids;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (double v : m.row(i)) row.push_back(round_sig9(v));
        rows.push_back(std::move(row));
    }
    out["matrix"] = std::move(rows);
    return out;
}

std::string matrix_to_csv(const MatrixD& m, const std::vector<std::string>& ids) {
    std::ostringstream out;
    out << "id";
    for (const auto& id : ids) out << ',' << csv_field(id);
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << csv_field(ids[i]);
        for (double v : m.row(i)) out << ',' << format_sig9(v);
        out << '\n';
    }
    return out.str();
}

} // namespace depara

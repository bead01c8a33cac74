#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "depara/matrix.hpp"
#include "depara/similarity.hpp"

namespace depara {

enum class RankDirection { descending_by_score, ascending_by_risk };

std::string_view to_string(RankDirection d) noexcept;

struct RankingEntry {
    std::string candidate_id;
    double score = 0.0;
    std::size_t rank = 0;
    bool tied = false; // shares its score with at least one other entry
};

/// Entries sorted by `direction`. Ranks use competition ranking: an entry's
/// rank is 1 + the number of strictly better entries. Exact ties keep input order.
struct RankingTable {
    std::string target_id;
    RankDirection direction = RankDirection::descending_by_score;
    std::vector<RankingEntry> entries;
};

struct PoolItem {
    std::string candidate_id;
    DeparaGraph graph;
};

/// Knowledge items (model/layer graphs) over one shared probe set.
struct KnowledgePool {
    std::vector<PoolItem> items;
};

using ScoredCandidate = std::pair<std::string, double>;

/// Sorts and ranks raw (id, value) pairs. Throws on an empty list or non-finite values.
RankingTable make_ranking(std::string target_id, std::vector<ScoredCandidate> scored, RankDirection direction);

/// Descending DEPARA similarity to the target; rank 1 is the most transferable.
RankingTable rank_by_similarity(const KnowledgePool& pool, const DeparaGraph& target, double lambda,
                                NodeTerm node_term = NodeTerm::required);

/// Ascending empirical risk; rank 1 is the lowest risk.
RankingTable rank_by_risk(std::vector<ScoredCandidate> risks, std::string target_id = {});

struct LayerSelection {
    std::string candidate_id;
    double score = 0.0;
    bool tie = false; // another layer reached the same maximum; first in input order wins
    RankingTable ranking;
};

/// Argmax of similarity between each layer graph and the target's encoder graph.
LayerSelection select_layer(const KnowledgePool& layers, const DeparaGraph& target_encoder, double lambda,
                            NodeTerm node_term = NodeTerm::required);

/// M(i, j) = graph_similarity(i, j).score; exactly symmetric.
MatrixD all_pairs_matrix(const KnowledgePool& pool, double lambda, NodeTerm node_term = NodeTerm::required);

nlohmann::ordered_json to_json(const RankingTable& table);
RankingTable ranking_from_json(const nlohmann::json& j);
std::string to_csv(const RankingTable& table);

nlohmann::ordered_json matrix_to_json(const MatrixD& m, const std::vector<std::string>& ids);
std::string matrix_to_csv(const MatrixD& m, const std::vector<std::string>& ids);

} // namespace depara

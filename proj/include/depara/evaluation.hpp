#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "depara/matrix.hpp"
#include "depara/transferability.hpp"

namespace depara {

/// Candidates regarded as relevant for one query (e.g. its top-5 reference sources).
struct RelevanceSet {
    std::string query_id;
    std::set<std::string> relevant_ids;
};

/// Hits among the first k entries of the table, in table order.
std::size_t hits_at_k(const RankingTable& ranking, const RelevanceSet& rel, std::size_t k);
double precision_at_k(const RankingTable& ranking, const RelevanceSet& rel, std::size_t k);
double recall_at_k(const RankingTable& ranking, const RelevanceSet& rel, std::size_t k);

struct PrPoint {
    std::size_t k = 0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Macro-averaged precision/recall for K = 1..(smallest candidate count).
struct PrCurve {
    std::vector<PrPoint> points;
};

/// Rankings are matched to relevance sets through target_id == query_id.
PrCurve pr_curve(std::span<const RankingTable> rankings, std::span<const RelevanceSet> rels);

std::string to_csv(const PrCurve& curve);
std::string to_svg(const PrCurve& curve);

/// Tie-corrected Spearman between similarities and downstream accuracies.
double sim_accuracy_correlation(std::span<const double> sims, std::span<const double> accs);

/// Agglomerative merge tree. Nodes 0..n-1 are leaves; merge m creates node n+m.
struct Dendrogram {
    struct Merge {
        std::size_t left = 0;
        std::size_t right = 0;
        double height = 0.0;
        std::size_t size = 0;
    };
    std::vector<std::string> leaves;
    std::vector<Merge> merges;
    double lambda = 0.0;
};

/// Average-linkage clustering on d = 1 - score / (1 + lambda). The closest
/// pair merges first; equal distances are broken by the lexicographically
/// smallest (min leaf id, min leaf id) pair, so the result does not depend on
/// the order of `ids`.
Dendrogram task_tree(const MatrixD& scores, const std::vector<std::string>& ids, double lambda);

/// Children are written in order of their smallest leaf id.
std::string to_newick(const Dendrogram& tree);
nlohmann::ordered_json to_json(const Dendrogram& tree);

/// Accepts {"query": ["id", ...]} or [{"query_id": ..., "relevant_ids": [...]}, ...].
std::vector<RelevanceSet> relevance_from_json(const nlohmann::json& j);

} // namespace depara

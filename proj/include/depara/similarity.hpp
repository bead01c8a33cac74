#pragma once

#include <optional>

#include <json.hpp>

#include "depara/graph.hpp"

namespace depara {

/// Node term, edge term and their combination score = s_nodes + lambda * s_edges.
/// In edges-only mode s_nodes is absent and score = lambda * s_edges.
struct SimilarityReport {
    std::optional<double> s_nodes;
    double s_edges = 0.0;
    double lambda = 1.0;
    double score = 0.0;
};

enum class NodeTerm {
    required, // node dimensions must match
    omit,     // edges-only comparison, e.g. models with different input spaces
};

/// Throws ValidationError("incomparable graphs ...") unless probe_id and n match.
void require_comparable(const DeparaGraph& a, const DeparaGraph& b);

/// Mean cosine between paired node vectors.
double node_similarity(const DeparaGraph& a, const DeparaGraph& b);

/// Tie-corrected Spearman correlation of the two edge vectors.
double edge_similarity(const DeparaGraph& a, const DeparaGraph& b);

SimilarityReport graph_similarity(const DeparaGraph& a, const DeparaGraph& b, double lambda,
                                  NodeTerm node_term = NodeTerm::required);

/// {"s_nodes", "s_edges", "lambda", "score"} in that order, 9 significant digits.
nlohmann::ordered_json to_json(const SimilarityReport& report);

} // namespace depara

#include "depara/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "depara/rank_stats.hpp"
#include "depara/report_format.hpp"

namespace depara {

void require_comparable(const DeparaGraph& a, const DeparaGraph& b) {
    if (a.probe_id != b.probe_id) {
        throw ValidationError("incomparable graphs: probe_id '" + a.probe_id + "' vs '" + b.probe_id + "'");
    }
    if (a.n() != b.n()) {
        throw ValidationError("incomparable graphs: " + std::to_string(a.n()) + " vs " + std::to_string(b.n()) +
                              " probe points");
    }
}

double node_similarity(const DeparaGraph& a, const DeparaGraph& b) {
    require_comparable(a, b);
    if (a.node_dim() != b.node_dim()) {
        throw ValidationError("incomparable graphs: node dimensionality " + std::to_string(a.node_dim()) +
                              " vs " + std::to_string(b.node_dim()));
    }
    double total = 0.0;
    for (std::size_t k = 0; k < a.n(); ++k) {
        const double c = cosine_unclamped(a.nodes.row(k), b.nodes.row(k));
        if (std::isnan(c)) {
            throw ValidationError("zero attribution vector at probe index " + std::to_string(k));
        }
        total += std::clamp(c, -1.0, 1.0);
    }
    return std::clamp(total / static_cast<double>(a.n()), -1.0, 1.0);
}

double edge_similarity(const DeparaGraph& a, const DeparaGraph& b) {
    require_comparable(a, b);
    try {
        return spearman(a.edges, b.edges);
    } catch (const ValidationError&) {
        throw ValidationError("degenerate edge distribution: an edge vector is constant");
    }
}

SimilarityReport graph_similarity(const DeparaGraph& a, const DeparaGraph& b, double lambda, NodeTerm node_term) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("lambda must be a finite value >= 0");
    }
    SimilarityReport r;
    r.lambda = lambda;
    r.s_edges = edge_similarity(a, b);
    if (node_term == NodeTerm::required) {
        r.s_nodes = node_similarity(a, b);
        r.score = *r.s_nodes + lambda * r.s_edges;
    } else {
        r.score = lambda * r.s_edges;
    }
    return r;
}

nlohmann::ordered_json to_json(const SimilarityReport& report) {
    nlohmann::ordered_json out;
    out["s_nodes"] = report.s_nodes ? nlohmann::ordered_json(round_sig9(*report.s_nodes)) : nullptr;
    out["s_edges"] = round_sig9(report.s_edges);
    out["lambda"] = round_sig9(report.lambda);
    out["score"] = round_sig9(report.score);
    return out;
}

} // namespace depara

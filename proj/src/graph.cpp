#include "depara/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "depara/parallel.hpp"

namespace depara {

std::size_t edge_count(std::size_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

std::size_t edge_index(std::size_t p, std::size_t q, std::size_t n) {
    if (p >= q || q >= n) {
        throw ValidationError("edge_index needs 0 <= p < q < n, got p=" + std::to_string(p) +
                              " q=" + std::to_string(q) + " n=" + std::to_string(n));
    }
    // pairs preceding row p: (n-1) + (n-2) + ... + (n-p)
    return p * n - p * (p + 1) / 2 + (q - p - 1);
}

double cosine_unclamped(std::span<const float> a, std::span<const float> b) noexcept {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

DeparaGraph build_graph(const ProbeBundle& bundle) {
    validate_bundle(bundle);
    const std::size_t n = bundle.n();
    for (std::size_t k = 0; k < n; ++k) {
        const auto row = bundle.embeddings.row(k);
        if (std::all_of(row.begin(), row.end(), [](float v) { return v == 0.0f; })) {
            throw ValidationError("zero embedding at probe index " + std::to_string(k) +
                                  " (cosine undefined)");
        }
    }

    DeparaGraph g;
    g.model_id = bundle.model_id;
    g.layer_id = bundle.layer_id;
    g.probe_id = bundle.probe_id;
    g.nodes = bundle.attributions;
    g.edges.assign(edge_count(n), 0.0);

    parallel_for(n - 1, [&](std::size_t p) {
        const auto a = bundle.embeddings.row(p);
        std::size_t idx = edge_index(p, p + 1, n);
        for (std::size_t q = p + 1; q < n; ++q, ++idx) {
            g.edges[idx] = std::clamp(cosine_unclamped(a, bundle.embeddings.row(q)), -1.0, 1.0);
        }
    });
    return g;
}

nlohmann::ordered_json graph_to_json(const DeparaGraph& graph, bool include_nodes) {
    nlohmann::ordered_json out;
    out["model_id"] = graph.model_id;
    out["layer_id"] = graph.layer_id;
    out["probe_id"] = graph.probe_id;
    out["n"] = graph.n();
    out["node_dim"] = graph.node_dim();
    out["edges"] = graph.edges;
    if (include_nodes) {
        auto nodes = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < graph.n(); ++k) {
            const auto row = graph.nodes.row(k);
            nodes.push_back(std::vector<float>(row.begin(), row.end()));
        }
        out["nodes"] = std::move(nodes);
    }
    return out;
}

} // namespace depara

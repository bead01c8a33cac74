#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "depara/matrix.hpp"
#include "depara/tensor_store.hpp"

namespace depara {

/// Deep attribution graph over a probe set. Node k is the vectorized
/// attribution map of probe point k; edges hold the cosine similarity of every
/// unordered pair of embeddings, stored once in lexicographic (p, q) order.
struct DeparaGraph {
    std::string model_id;
    std::string layer_id;
    std::string probe_id;
    MatrixF nodes;             // n x d_input
    std::vector<double> edges; // n(n-1)/2, each in [-1, 1]

    std::size_t n() const noexcept { return nodes.rows(); }
    std::size_t node_dim() const noexcept { return nodes.cols(); }
};

/// n(n-1)/2.
std::size_t edge_count(std::size_t n) noexcept;

/// Flat position of pair (p, q), 0 <= p < q < n, in lexicographic order.
std::size_t edge_index(std::size_t p, std::size_t q, std::size_t n);

/// Cosine of two vectors accumulated in f64, without clamping.
/// Returns NaN when either vector is all zeros.
double cosine_unclamped(std::span<const float> a, std::span<const float> b) noexcept;

/// Throws ValidationError naming the probe index if an embedding row is zero.
DeparaGraph build_graph(const ProbeBundle& bundle);

/// Debug dump; not a stable format.
nlohmann::ordered_json graph_to_json(const DeparaGraph& graph, bool include_nodes);

} // namespace depara

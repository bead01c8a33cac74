#include "depara/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "depara/rank_stats.hpp"
#include "depara/report_format.hpp"

namespace depara {
namespace {

void check_k(const RankingTable& ranking, std::size_t k) {
    if (k < 1 || k > ranking.entries.size()) {
        throw ValidationError("k out of range: " + std::to_string(k) + " with " +
                              std::to_string(ranking.entries.size()) + " candidates");
    }
}

void check_relevance(const RelevanceSet& rel) {
    if (rel.relevant_ids.empty()) {
        throw ValidationError("relevance set for '" + rel.query_id + "' is empty");
    }
}

std::string newick_label(const std::string& id) {
    if (id.find_first_of(" ()[]':;,\t\n") == std::string::npos && !id.empty()) return id;
    std::string out = "'";
    for (char c : id) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

struct Cluster {
    std::size_t node = 0;
    std::vector<std::size_t> members; // leaf indices, sorted by id
    std::string key;                  // smallest leaf id
};

} // namespace

std::size_t hits_at_k(const RankingTable& ranking, const RelevanceSet& rel, std::size_t k) {
    check_k(ranking, k);
    check_relevance(rel);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (rel.relevant_ids.contains(ranking.entries[i].candidate_id)) ++hits;
    }
    return hits;
}

double precision_at_k(const RankingTable& ranking, const RelevanceSet& rel, std::size_t k) {
    return static_cast<double>(hits_at_k(ranking, rel, k)) / static_cast<double>(k);
}

double recall_at_k(const RankingTable& ranking, const RelevanceSet& rel, std::size_t k) {
    return static_cast<double>(hits_at_k(ranking, rel, k)) / static_cast<double>(rel.relevant_ids.size());
}

PrCurve pr_curve(std::span<const RankingTable> rankings, std::span<const RelevanceSet> rels) {
    if (rankings.empty()) {
        throw ValidationError("pr_curve needs at least one ranking");
    }
    std::vector<const RelevanceSet*> matched;
    std::size_t max_k = std::numeric_limits<std::size_t>::max();
    for (const RankingTable& table : rankings) {
        const auto it = std::find_if(rels.begin(), rels.end(),
                                     [&](const RelevanceSet& r) { return r.query_id == table.target_id; });
        if (it == rels.end()) {
            throw ValidationError("missing relevance set for query '" + table.target_id + "'");
        }
        matched.push_back(&*it);
        max_k = std::min(max_k, table.entries.size());
    }
    PrCurve curve;
    const auto queries = static_cast<double>(rankings.size());
    for (std::size_t k = 1; k <= max_k; ++k) {
        double p = 0.0;
        double r = 0.0;
        for (std::size_t q = 0; q < rankings.size(); ++q) {
            p += precision_at_k(rankings[q], *matched[q], k);
            r += recall_at_k(rankings[q], *matched[q], k);
        }
        curve.points.push_back({k, p / queries, r / queries});
    }
    return curve;
}

std::string to_csv(const PrCurve& curve) {
    std::ostringstream out;
    out << "k,precision,recall\n";
    for (const PrPoint& pt : curve.points) {
        out << pt.k << ',' << format_sig9(pt.precision) << ',' << format_sig9(pt.recall) << '\n';
    }
    return out.str();
}

std::string to_svg(const PrCurve& curve) {
    constexpr double width = 400;
    constexpr double height = 300;
    constexpr double margin = 40;
    const auto sx = [&](double recall) { return margin + recall * (width - 2 * margin); };
    const auto sy = [&](double precision) { return height - margin - precision * (height - 2 * margin); };
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1) << "\" y2=\"" << sy(0)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(0) << "\" y2=\"" << sy(1)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">recall</text>\n";
    out << "<text x=\"12\" y=\"" << height / 2 << "\" transform=\"rotate(-90 12 " << height / 2
        << ")\" text-anchor=\"middle\">precision</text>\n";
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i > 0) out << ' ';
        out << format_sig9(sx(curve.points[i].recall)) << ',' << format_sig9(sy(curve.points[i].precision));
    }
    out << "\"/>\n</svg>\n";
    return out.str();
}

double sim_accuracy_correlation(std::span<const double> sims, std::span<const double> accs) {
    if (sims.size() != accs.size()) {
        throw ValidationError("similarity and accuracy lists differ in length");
    }
    if (sims.size() < 3) {
        throw ValidationError("need at least 3 (similarity, accuracy) pairs");
    }
    return spearman(sims, accs);
}

Dendrogram task_tree(const MatrixD& scores, const std::vector<std::string>& ids, double lambda) {
    const std::size_t n = ids.size();
    if (n == 0) {
        throw ValidationError("task_tree needs at least one task");
    }
    if (scores.rows() != n || scores.cols() != n) {
        throw ValidationError("score matrix shape does not match the id list");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("lambda must be a finite value >= 0");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(scores(i, j))) throw ValidationError("non-finite similarity score");
            if (std::abs(scores(i, j) - scores(j, i)) > 1e-9) {
                throw ValidationError("asymmetric score matrix at (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
            }
        }
    }
    if (std::set<std::string>(ids.begin(), ids.end()).size() != n) {
        throw ValidationError("task ids must be unique");
    }

    const double scale = 1.0 + lambda;
    const auto distance = [&](std::size_t i, std::size_t j) {
        return 1.0 - 0.5 * (scores(i, j) + scores(j, i)) / scale;
    };

    Dendrogram tree;
    tree.leaves = ids;
    tree.lambda = lambda;
    std::vector<double> heights(n, 0.0);

    std::vector<Cluster> active;
    for (std::size_t i = 0; i < n; ++i) active.push_back({i, {i}, ids[i]});

    // Average linkage summed over members in id order, so the arithmetic
    // and therefore tie detection is independent of the input permutation.
    const auto linkage = [&](const Cluster& a, const Cluster& b) {
        double total = 0.0;
        for (std::size_t i : a.members) {
            for (std::size_t j : b.members) total += distance(i, j);
        }
        return total / static_cast<double>(a.members.size() * b.members.size());
    };

    while (active.size() > 1) {
        std::size_t best_a = 0;
        std::size_t best_b = 1;
        double best_d = std::numeric_limits<double>::infinity();
        std::pair<std::string, std::string> best_key;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double d = linkage(active[a], active[b]);
                auto key = std::minmax(active[a].key, active[b].key);
                std::pair<std::string, std::string> k{key.first, key.second};
                if (d < best_d || (d == best_d && k < best_key)) {
                    best_d = d;
                    best_a = a;
                    best_b = b;
                    best_key = std::move(k);
                }
            }
        }
        Cluster left = std::move(active[best_a]);
        Cluster right = std::move(active[best_b]);
        if (right.key < left.key) std::swap(left, right);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_a));

        const double height = std::max({best_d, heights[left.node], heights[right.node]});
        Dendrogram::Merge merge{left.node, right.node, height, left.members.size() + right.members.size()};
        tree.merges.push_back(merge);
        heights.push_back(height);

        Cluster merged;
        merged.node = n + tree.merges.size() - 1;
        merged.members = left.members;
        merged.members.insert(merged.members.end(), right.members.begin(), right.members.end());
        std::sort(merged.members.begin(), merged.members.end(),
                  [&](std::size_t i, std::size_t j) { return ids[i] < ids[j]; });
        merged.key = left.key;
        active.push_back(std::move(merged));
    }
    return tree;
}

std::string to_newick(const Dendrogram& tree) {
    const std::size_t n = tree.leaves.size();
    const auto height_of = [&](std::size_t node) { return node < n ? 0.0 : tree.merges[node - n].height; };
    // Recursion depth is bounded by the task count (dozens).
    const auto render = [&](const auto& self, std::size_t node, double parent_height) -> std::string {
        std::string text;
        if (node < n) {
            text = newick_label(tree.leaves[node]);
        } else {
            const auto& m = tree.merges[node - n];
            text = "(" + self(self, m.left, m.height) + "," + self(self, m.right, m.height) + ")";
        }
        if (parent_height >= 0.0) {
            text += ":" + format_sig9(parent_height - height_of(node));
        }
        return text;
    };
    const std::size_t root = tree.merges.empty() ? 0 : n + tree.merges.size() - 1;
    return render(render, root, -1.0) + ";";
}

nlohmann::ordered_json to_json(const Dendrogram& tree) {
    nlohmann::ordered_json out;
    out["leaves"] = tree.leaves;
    out["distance"] = "1 - score/(1+lambda)";
    out["linkage"] = "average";
    out["lambda"] = round_sig9(tree.lambda);
    auto merges = nlohmann::ordered_json::array();
    for (const auto& m : tree.merges) {
        nlohmann::ordered_json row;
        row["left"] = m.left;
        row["right"] = m.right;
        row["height"] = round_sig9(m.height);
        row["size"] = m.size;
        merges.push_back(std::move(row));
    }
    out["merges"] = std::move(merges);
    out["newick"] = to_newick(tree);
    return out;
}

std::vector<RelevanceSet> relevance_from_json(const nlohmann::json& j) {
    std::vector<RelevanceSet> out;
    const auto add = [&](std::string query, const nlohmann::json& ids) {
        RelevanceSet rel;
        rel.query_id = std::move(query);
        for (const auto& id : ids) {
            if (!rel.relevant_ids.insert(id.get<std::string>()).second) {
                throw ValidationError("duplicate relevant id for query '" + rel.query_id + "'");
            }
        }
        check_relevance(rel);
        out.push_back(std::move(rel));
    };
    try {
        if (j.is_object()) {
            for (const auto& [query, ids] : j.items()) add(query, ids);
        } else if (j.is_array()) {
            for (const auto& row : j) add(row.at("query_id").get<std::string>(), row.at("relevant_ids"));
        } else {
            throw ValidationError("relevance JSON must be an object or an array");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed relevance JSON: ") + e.what());
    }
    return out;
}

} // namespace depara

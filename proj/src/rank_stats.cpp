#include "depara/rank_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "depara/error.hpp"

namespace depara {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t m = values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

    std::vector<double> ranks(m);
    std::size_t start = 0;
    while (start < m) {
        std::size_t end = start + 1;
        while (end < m && values[order[end]] == values[order[start]]) ++end;
        // positions start..end-1 hold ranks start+1..end
        const double rank = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t i = start; i < end; ++i) ranks[order[i]] = rank;
        start = end;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError("spearman inputs differ in length");
    }
    if (a.size() < 2) {
        throw ValidationError("spearman needs at least 2 paired values");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    // Average ranks always sum to m(m+1)/2, so the mean is exact.
    const double mean = 0.5 * static_cast<double>(a.size() + 1);
    double cov = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) {
        throw ValidationError("degenerate distribution: constant input has no rank variance");
    }
    return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw ValidationError("median of an empty list");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

} // namespace depara

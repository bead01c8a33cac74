#pragma once

#include <span>
#include <vector>

namespace depara {

/// 1-based ranks in ascending order; tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the average ranks. Equals 1 - 6*sum(d^2)/(m^3 - m)
/// when neither input has ties. Throws ValidationError("degenerate ...") when
/// either input is constant, and when the lengths differ or m < 2.
double spearman(std::span<const double> a, std::span<const double> b);

/// Sample median; the mean of the two middle values for even sizes.
double median(std::vector<double> values);

} // namespace depara

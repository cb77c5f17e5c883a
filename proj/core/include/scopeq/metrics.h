#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scopeq {

// Adjusted Rand index between two labelings of the same points.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Ranks starting at 1, ties get their average rank.
std::vector<double> average_ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace scopeq

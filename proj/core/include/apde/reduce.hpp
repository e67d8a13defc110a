#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace apde {

/// Leaf size of the fixed summation tree.
inline constexpr std::size_t kTreeLeaf = 1024;

/// Sum with a fixed shape: sequential sums over leaves of kTreeLeaf entries,
/// then pairwise combination of the leaf sums. The shape depends only on the
/// length, so the result is bit-identical for any worker count.
double tree_sum(std::span<const double> values);

/// tree_sum of term(i) for i in [0, n) without materialising the terms.
double tree_sum_map(std::size_t n, const std::function<double(std::size_t)>& term);

} // namespace apde

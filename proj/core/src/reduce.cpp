#include "apde/reduce.hpp"

#include "apde/parallel.hpp"

#include <vector>

namespace apde {
namespace {

double pairwise(std::span<double> partial)
{
    std::size_t n = partial.size();
    if (n == 0) return 0.0;
    while (n > 1) {
        const std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i < n / 2; ++i)
            partial[i] = partial[2 * i] + partial[2 * i + 1];
        if (n % 2) partial[n / 2] = partial[n - 1];
        n = half;
    }
    return partial[0];
}

} // namespace

double tree_sum(std::span<const double> values)
{
    return tree_sum_map(values.size(), [values](std::size_t i) { return values[i]; });
}

double tree_sum_map(std::size_t n, const std::function<double(std::size_t)>& term)
{
    const std::size_t leaves = (n + kTreeLeaf - 1) / kTreeLeaf;
    std::vector<double> partial(leaves, 0.0);
    parallel_for(leaves, [&](std::size_t lb, std::size_t le) {
        for (std::size_t leaf = lb; leaf < le; ++leaf) {
            const std::size_t b = leaf * kTreeLeaf;
            const std::size_t e = std::min(n, b + kTreeLeaf);
            double s = 0.0;
            for (std::size_t i = b; i < e; ++i) s += term(i);
            partial[leaf] = s;
        }
    });
    return pairwise(partial);
}

} // namespace apde

#include "gravwell/ranking.hpp"

#include <algorithm>
#include <numeric>

namespace gravwell {

std::vector<double> average_ranks(std::span<const double> keys) {
    const std::size_t n = keys.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && keys[order[j]] == keys[order[i]]) ++j;
        // positions i..j-1 (0-based) -> ranks i+1..j, mean = (i + 1 + j) / 2
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

} // namespace gravwell

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "spraydot/error.hpp"

namespace spraydot {

/// Mann-Whitney AUC: probability that a draw from `upper` exceeds a draw from
/// `lower`, ties credited one half. 0.5 means the samples are exchangeable;
/// values near 1 mean `lower` is stochastically smaller.
inline double mann_whitney_auc(std::span<const double> lower, std::span<const double> upper) {
    if (lower.empty() || upper.empty()) throw DataError("AUC needs two non-empty samples");
    std::vector<double> sorted(upper.begin(), upper.end());
    std::sort(sorted.begin(), sorted.end());
    // Twice the U statistic, accumulated exactly in integers.
    std::uint64_t twice_u = 0;
    for (const double x : lower) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
        const auto hi = std::upper_bound(lo, sorted.end(), x);
        twice_u += 2 * static_cast<std::uint64_t>(sorted.end() - hi) + static_cast<std::uint64_t>(hi - lo);
    }
    return static_cast<double>(twice_u) /
           (2.0 * static_cast<double>(lower.size()) * static_cast<double>(upper.size()));
}

}  // namespace spraydot

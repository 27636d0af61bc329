#pragma once

// Slow, obviously-correct reference implementations used to check the
// library. None of them share code with include/spraydot.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

/// Sum of the lightest spanning tree, by enumerating every (n-1)-edge subset.
inline double spanning_tree_min_weight(const std::vector<std::pair<double, double>>& pts) {
    const std::size_t n = pts.size();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) edges.emplace_back(a, b);
    auto len = [&](const std::pair<std::size_t, std::size_t>& e) {
        return std::hypot(pts[e.first].first - pts[e.second].first, pts[e.first].second - pts[e.second].second);
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> pick(edges.size(), false);
    std::fill(pick.end() - static_cast<std::ptrdiff_t>(n - 1), pick.end(), true);
    do {
        std::vector<std::size_t> comp(n);
        std::iota(comp.begin(), comp.end(), 0);
        auto find = [&](std::size_t x) {
            while (comp[x] != x) x = comp[x];
            return x;
        };
        bool tree = true;
        double w = 0.0;
        for (std::size_t e = 0; e < edges.size() && tree; ++e) {
            if (!pick[e]) continue;
            const auto ra = find(edges[e].first), rb = find(edges[e].second);
            if (ra == rb) tree = false;
            comp[ra] = rb;
            w += len(edges[e]);
        }
        if (tree) best = std::min(best, w);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

struct Circle {
    double x, y, r;
};

/// Smallest circle over every circle defined by 2 or 3 input points that
/// covers all of them.
inline Circle enclosing_circle_bruteforce(const std::vector<std::pair<double, double>>& p) {
    if (p.size() == 1) return {p[0].first, p[0].second, 0.0};
    const double tol = 1e-9;
    Circle best{0, 0, std::numeric_limits<double>::infinity()};
    auto covers_all = [&](const Circle& c) {
        for (const auto& q : p)
            if (std::hypot(q.first - c.x, q.second - c.y) > c.r + tol) return false;
        return true;
    };
    auto consider = [&](const Circle& c) {
        if (c.r < best.r && covers_all(c)) best = c;
    };
    const std::size_t n = p.size();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double cx = (p[a].first + p[b].first) / 2, cy = (p[a].second + p[b].second) / 2;
            consider({cx, cy, std::hypot(p[a].first - cx, p[a].second - cy)});
            for (std::size_t c = b + 1; c < n; ++c) {
                const double ax = p[a].first, ay = p[a].second, bx = p[b].first, by = p[b].second;
                const double qx = p[c].first, qy = p[c].second;
                const double d = 2 * (ax * (by - qy) + bx * (qy - ay) + qx * (ay - by));
                if (std::abs(d) < 1e-12) continue;
                const double ux = ((ax * ax + ay * ay) * (by - qy) + (bx * bx + by * by) * (qy - ay) +
                                   (qx * qx + qy * qy) * (ay - by)) /
                                  d;
                const double uy = ((ax * ax + ay * ay) * (qx - bx) + (bx * bx + by * by) * (ax - qx) +
                                   (qx * qx + qy * qy) * (bx - ax)) /
                                  d;
                consider({ux, uy, std::max({std::hypot(ax - ux, ay - uy), std::hypot(bx - ux, by - uy),
                                            std::hypot(qx - ux, qy - uy)})});
            }
        }
    return best;
}

/// (#{x < y} + 0.5 #{x == y}) / (|xs| |ys|) by direct double loop.
inline double pairwise_auc(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::uint64_t twice = 0;
    for (const double x : xs)
        for (const double y : ys) twice += x < y ? 2 : (x == y ? 1 : 0);
    return static_cast<double>(twice) / (2.0 * static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
}

/// Connected components of a binary raster by iterative DFS.
inline std::size_t component_count(const std::vector<int>& on, int w, int h, bool eight) {
    std::vector<int> label(on.size(), 0);
    std::size_t count = 0;
    for (int start = 0; start < w * h; ++start) {
        if (!on[start] || label[start]) continue;
        ++count;
        std::vector<int> stack{start};
        label[start] = 1;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            const int cx = cur % w, cy = cur / w;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (!eight && dx != 0 && dy != 0) continue;
                    const int nx = cx + dx, ny = cy + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const int ni = ny * w + nx;
                    if (on[ni] && !label[ni]) {
                        label[ni] = 1;
                        stack.push_back(ni);
                    }
                }
        }
    }
    return count;
}

struct NaiveMerge {
    std::set<std::size_t> a, b;
    double height;
};

/// Textbook agglomeration: recompute every cluster-to-cluster linkage from
/// the original point distances at each step. kind: 0 single, 1 complete,
/// 2 average, 3 ward (points must then be the raw coordinates).
inline std::vector<NaiveMerge> naive_hc(const std::vector<std::vector<double>>& pts, int kind) {
    auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0;
        for (std::size_t c = 0; c < pts[i].size(); ++c) s += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
        return std::sqrt(s);
    };
    auto linkage = [&](const std::set<std::size_t>& x, const std::set<std::size_t>& y) {
        if (kind == 3) {
            const std::size_t dim = pts[0].size();
            std::vector<double> cx(dim, 0), cy(dim, 0);
            for (auto i : x)
                for (std::size_t c = 0; c < dim; ++c) cx[c] += pts[i][c] / static_cast<double>(x.size());
            for (auto j : y)
                for (std::size_t c = 0; c < dim; ++c) cy[c] += pts[j][c] / static_cast<double>(y.size());
            double s = 0;
            for (std::size_t c = 0; c < dim; ++c) s += (cx[c] - cy[c]) * (cx[c] - cy[c]);
            const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
            return std::sqrt(2.0 * nx * ny / (nx + ny)) * std::sqrt(s);
        }
        double lo = std::numeric_limits<double>::infinity(), hi = 0, sum = 0;
        for (auto i : x)
            for (auto j : y) {
                const double d = dist(i, j);
                lo = std::min(lo, d);
                hi = std::max(hi, d);
                sum += d;
            }
        if (kind == 0) return lo;
        if (kind == 1) return hi;
        return sum / static_cast<double>(x.size() * y.size());
    };
    std::vector<std::set<std::size_t>> clusters;
    for (std::size_t i = 0; i < pts.size(); ++i) clusters.push_back({i});
    std::vector<NaiveMerge> out;
    while (clusters.size() > 1) {
        std::size_t bi = 0, bj = 1;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double d = linkage(clusters[i], clusters[j]);
                if (d < bd) {
                    bd = d;
                    bi = i;
                    bj = j;
                }
            }
        out.push_back({clusters[bi], clusters[bj], bd});
        clusters[bi].insert(clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
        std::sort(clusters.begin(), clusters.end(), [](const auto& x, const auto& y) { return *x.begin() < *y.begin(); });
    }
    return out;
}

/// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * n).
inline std::size_t nearest_rank(std::vector<std::size_t> v, double p) {
    std::sort(v.begin(), v.end());
    std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    rank = std::max<std::size_t>(rank, 1);
    return v[std::min(rank, v.size()) - 1];
}

/// Poisson variates by inversion, independent of the library's generator.
inline std::vector<unsigned> poisson_draws(double lambda, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<unsigned> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::generate_canonical<double, 64>(gen);
        double p = std::exp(-lambda), cdf = p;
        unsigned k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= lambda / k;
            cdf += p;
        }
        out.push_back(k);
    }
    return out;
}

inline std::vector<double> exponential_draws(double rate, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
        double u;
        do {
            u = std::generate_canonical<double, 64>(gen);
        } while (u <= 0.0 || u >= 1.0);
        out.push_back(-std::log(u) / rate);
    }
    return out;
}

}  // namespace oracle

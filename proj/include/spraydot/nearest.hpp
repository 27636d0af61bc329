#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "spraydot/color_quant.hpp"

namespace spraydot {

/// Static k-d tree over color points for exact nearest-neighbour distance.
class KdTree {
public:
    KdTree() = default;

    KdTree(std::vector<ColorPoint> points, std::size_t d) : points_(std::move(points)), d_(d) {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(points_.size());
        if (!points_.empty()) build(0, points_.size(), 0);
    }

    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }

    /// Squared Euclidean distance to the closest point (infinity when empty).
    [[nodiscard]] double nearest_sq(const ColorPoint& q) const {
        double best = std::numeric_limits<double>::infinity();
        if (!nodes_.empty()) search(0, q, best);
        return best;
    }

private:
    struct Node {
        std::size_t point = 0;
        std::size_t axis = 0;
        std::size_t left = npos;
        std::size_t right = npos;
    };
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t build(std::size_t begin, std::size_t end, std::size_t depth) {
        if (begin >= end) return npos;
        const std::size_t axis = depth % d_;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) {
                             if (points_[a][axis] != points_[b][axis]) return points_[a][axis] < points_[b][axis];
                             return a < b;
                         });
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{order_[mid], axis, npos, npos});
        const std::size_t left = build(begin, mid, depth + 1);
        const std::size_t right = build(mid + 1, end, depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(std::size_t id, const ColorPoint& q, double& best) const {
        const Node& node = nodes_[id];
        const ColorPoint& p = points_[node.point];
        double dist = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            const double diff = q[i] - p[i];
            dist += diff * diff;
        }
        best = std::min(best, dist);
        const double delta = q[node.axis] - p[node.axis];
        const std::size_t near = delta < 0 ? node.left : node.right;
        const std::size_t far = delta < 0 ? node.right : node.left;
        if (near != npos) search(near, q, best);
        if (far != npos && delta * delta <= best) search(far, q, best);
    }

    std::vector<ColorPoint> points_;
    std::size_t d_ = 3;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace spraydot

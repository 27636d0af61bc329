#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spraydot/error.hpp"

namespace spraydot {

enum class Linkage { single, complete, average, ward };

inline std::string_view to_string(Linkage l) noexcept {
    switch (l) {
        case Linkage::single: return "single";
        case Linkage::complete: return "complete";
        case Linkage::average: return "average";
        case Linkage::ward: return "ward";
    }
    return "average";
}

inline Linkage parse_linkage(std::string_view s) {
    if (s == "single") return Linkage::single;
    if (s == "complete") return Linkage::complete;
    if (s == "average") return Linkage::average;
    if (s == "ward") return Linkage::ward;
    throw ValidationError("unknown linkage '" + std::string(s) + "'");
}

/// Dense symmetric dissimilarity matrix.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

    /// Fills every pair from dist(i, j), evaluated once per unordered pair.
    template <typename Fn>
    static DistanceMatrix from_function(std::size_t n, Fn&& dist) {
        DistanceMatrix m(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, dist(i, j));
        return m;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
    double& raw(std::size_t i, std::size_t j) noexcept { return d_[i * n_ + j]; }

    void set(std::size_t i, std::size_t j, double v) noexcept {
        d_[i * n_ + j] = v;
        d_[j * n_ + i] = v;
    }

    void scale(double c) noexcept {
        for (auto& v : d_) v *= c;
    }

    /// Throws ValidationError unless symmetric, non-negative and zero on the diagonal.
    void validate() const {
        for (std::size_t i = 0; i < n_; ++i) {
            if ((*this)(i, i) != 0.0) throw ValidationError("distance matrix diagonal must be zero");
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double a = (*this)(i, j);
                const double b = (*this)(j, i);
                if (std::isnan(a) || std::isnan(b)) throw ValidationError("distance matrix contains NaN");
                if (a < 0.0 || b < 0.0) throw ValidationError("distance matrix has negative entries");
                if (a != b) throw ValidationError("distance matrix is not symmetric");
            }
        }
    }

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

/// One agglomeration step. Node ids 0..m-1 are leaves; merge t creates node m+t.
/// `left` is the subtree holding the smaller leaf id.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

class Dendrogram {
public:
    Dendrogram() = default;
    Dendrogram(std::size_t leaves, std::vector<Merge> merges, Linkage linkage)
        : leaves_(leaves), merges_(std::move(merges)), linkage_(linkage) {}

    [[nodiscard]] std::size_t leaf_count() const noexcept { return leaves_; }
    [[nodiscard]] const std::vector<Merge>& merges() const noexcept { return merges_; }
    [[nodiscard]] Linkage linkage() const noexcept { return linkage_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return leaves_ == 0 ? 0 : 2 * leaves_ - 1; }
    [[nodiscard]] std::size_t root() const noexcept { return node_count() - 1; }
    [[nodiscard]] bool is_leaf(std::size_t node) const noexcept { return node < leaves_; }
    [[nodiscard]] const Merge& merge_of(std::size_t node) const noexcept { return merges_[node - leaves_]; }

    [[nodiscard]] std::size_t size_of(std::size_t node) const noexcept {
        return is_leaf(node) ? 1 : merge_of(node).size;
    }

    [[nodiscard]] std::vector<std::size_t> parents() const {
        std::vector<std::size_t> parent(node_count(), node_count());
        for (std::size_t t = 0; t < merges_.size(); ++t) {
            parent[merges_[t].left] = leaves_ + t;
            parent[merges_[t].right] = leaves_ + t;
        }
        return parent;
    }

    /// Leaves in drawing order (left subtree first).
    [[nodiscard]] std::vector<std::size_t> leaf_order() const {
        std::vector<std::size_t> out;
        if (leaves_ == 0) return out;
        out.reserve(leaves_);
        std::vector<std::size_t> stack{root()};
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            if (is_leaf(node)) {
                out.push_back(node);
            } else {
                stack.push_back(merge_of(node).right);
                stack.push_back(merge_of(node).left);
            }
        }
        return out;
    }

    /// Leaf ids under `node`, ascending.
    [[nodiscard]] std::vector<std::size_t> leaves_under(std::size_t node) const {
        std::vector<std::size_t> out;
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            if (is_leaf(cur)) {
                out.push_back(cur);
            } else {
                stack.push_back(merge_of(cur).left);
                stack.push_back(merge_of(cur).right);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Nested {left, right, height} records; leaves are plain integer ids.
    [[nodiscard]] nlohmann::json to_json() const {
        if (leaves_ == 0) return nullptr;
        std::vector<nlohmann::json> nodes(node_count());
        for (std::size_t i = 0; i < leaves_; ++i) nodes[i] = i;
        for (std::size_t t = 0; t < merges_.size(); ++t) {
            const Merge& m = merges_[t];
            nlohmann::json j;
            j["left"] = std::move(nodes[m.left]);
            j["right"] = std::move(nodes[m.right]);
            j["height"] = m.height;
            nodes[leaves_ + t] = std::move(j);
        }
        return std::move(nodes[root()]);
    }

private:
    std::size_t leaves_ = 0;
    std::vector<Merge> merges_;
    Linkage linkage_ = Linkage::average;
};

namespace detail {

inline double lance_williams(Linkage linkage, double d_ki, double d_kj, double d_ij, double n_i,
                             double n_j, double n_k) noexcept {
    switch (linkage) {
        case Linkage::single: return std::min(d_ki, d_kj);
        case Linkage::complete: return std::max(d_ki, d_kj);
        case Linkage::average: return (n_i * d_ki + n_j * d_kj) / (n_i + n_j);
        case Linkage::ward: {
            const double v = ((n_k + n_i) * d_ki * d_ki + (n_k + n_j) * d_kj * d_kj - n_k * d_ij * d_ij) /
                             (n_k + n_i + n_j);
            return std::sqrt(std::max(0.0, v));
        }
    }
    return d_ki;
}

}  // namespace detail

/// Agglomerative clustering of m items under the given linkage.
///
/// A cluster is identified by its smallest leaf id. Among all pairs at the
/// minimum dissimilarity the lexicographically smallest (i, j) of those ids is
/// merged first, so the result is fully determined by the matrix. Nearest
/// neighbours are cached per cluster and rescanned only when invalidated,
/// which keeps typical runs near O(m^2).
inline Dendrogram hc_cluster(const DistanceMatrix& dist, Linkage linkage) {
    dist.validate();
    const std::size_t m = dist.size();
    if (m == 0) throw ValidationError("cannot cluster an empty item set");
    std::vector<Merge> merges;
    merges.reserve(m - 1);
    if (m == 1) return Dendrogram(1, std::move(merges), linkage);

    DistanceMatrix d = dist;
    std::vector<char> active(m, 1);
    std::vector<std::size_t> node(m);
    std::vector<std::size_t> size(m, 1);
    for (std::size_t i = 0; i < m; ++i) node[i] = i;

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> nn(m, m);
    std::vector<double> nnd(m, inf);

    auto rescan = [&](std::size_t k) {
        nn[k] = m;
        nnd[k] = inf;
        for (std::size_t l = k + 1; l < m; ++l) {
            if (!active[l]) continue;
            if (d(k, l) < nnd[k]) {
                nnd[k] = d(k, l);
                nn[k] = l;
            }
        }
    };
    for (std::size_t k = 0; k + 1 < m; ++k) rescan(k);

    for (std::size_t step = 0; step + 1 < m; ++step) {
        std::size_t i = m;
        for (std::size_t k = 0; k < m; ++k) {
            if (!active[k] || nn[k] == m) continue;
            if (i == m || nnd[k] < nnd[i]) i = k;
        }
        const std::size_t j = nn[i];
        const double height = nnd[i];
        const double d_ij = d(i, j);

        for (std::size_t k = 0; k < m; ++k) {
            if (!active[k] || k == i || k == j) continue;
            const double v = detail::lance_williams(linkage, d(k, i), d(k, j), d_ij,
                                                    static_cast<double>(size[i]),
                                                    static_cast<double>(size[j]),
                                                    static_cast<double>(size[k]));
            d.set(k, i, v);
        }
        merges.push_back(Merge{node[i], node[j], height, size[i] + size[j]});
        node[i] = m + step;
        size[i] += size[j];
        active[j] = 0;
        nn[j] = m;

        for (std::size_t k = 0; k < i; ++k) {
            if (!active[k]) continue;
            if (nn[k] == i || nn[k] == j) {
                rescan(k);
            } else if (d(k, i) < nnd[k] || (d(k, i) == nnd[k] && i < nn[k])) {
                nn[k] = i;
                nnd[k] = d(k, i);
            }
        }
        for (std::size_t k = i + 1; k < j; ++k)
            if (active[k] && nn[k] == j) rescan(k);
        rescan(i);
    }
    return Dendrogram(m, std::move(merges), linkage);
}

/// Euclidean distances between equally sized rows.
template <typename Row>
DistanceMatrix euclidean_distances(const std::vector<Row>& rows) {
    return DistanceMatrix::from_function(rows.size(), [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t c = 0; c < rows[a].size(); ++c) {
            const double diff = static_cast<double>(rows[a][c]) - static_cast<double>(rows[b][c]);
            s += diff * diff;
        }
        return std::sqrt(s);
    });
}

/// Root-to-leaf descent path of one leaf: 0 = left, 1 = right, with the
/// (|left|, |right|) branch sizes seen at each bifurcation.
struct LeafCode {
    std::size_t target = 0;
    std::vector<int> codes;
    std::vector<std::pair<std::size_t, std::size_t>> branch_sizes;
};

inline LeafCode leaf_code(const Dendrogram& tree, std::size_t target) {
    if (target >= tree.leaf_count()) throw LookupError("leaf " + std::to_string(target) + " is not in the tree");
    if (tree.leaf_count() < 2) throw LookupError("leaf codes need a tree with at least two leaves");
    const auto parent = tree.parents();
    std::vector<std::size_t> path{target};
    while (path.back() != tree.root()) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());

    LeafCode code;
    code.target = target;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        const Merge& m = tree.merge_of(path[s]);
        code.codes.push_back(path[s + 1] == m.left ? 0 : 1);
        code.branch_sizes.emplace_back(tree.size_of(m.left), tree.size_of(m.right));
    }
    return code;
}

/// Product over the descent of (size of the branch holding the target) /
/// (size of its sibling). Small values flag a leaf that keeps landing in the
/// minority branch.
inline double product_of_odds(const LeafCode& code) noexcept {
    double po = 1.0;
    for (std::size_t k = 0; k < code.codes.size(); ++k) {
        const auto [left, right] = code.branch_sizes[k];
        const double own = static_cast<double>(code.codes[k] == 0 ? left : right);
        const double other = static_cast<double>(code.codes[k] == 0 ? right : left);
        po *= own / other;
    }
    return po;
}

}  // namespace spraydot

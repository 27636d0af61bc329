#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "spraydot/cluster.hpp"
#include "spraydot/dots.hpp"
#include "spraydot/error.hpp"

namespace spraydot {

/// Density categories, densest first.
enum class CellCategory : std::uint8_t { R1 = 1, R2 = 2, R3 = 3, R4 = 4 };

inline std::string_view to_string(CellCategory c) noexcept {
    switch (c) {
        case CellCategory::R1: return "R1";
        case CellCategory::R2: return "R2";
        case CellCategory::R3: return "R3";
        case CellCategory::R4: return "R4";
    }
    return "R4";
}

inline CellCategory parse_cell_category(std::string_view s) {
    if (s == "R1") return CellCategory::R1;
    if (s == "R2") return CellCategory::R2;
    if (s == "R3") return CellCategory::R3;
    if (s == "R4") return CellCategory::R4;
    throw ValidationError("unknown cell category '" + std::string(s) + "'");
}

/// (small, medium, large) dot counts of one cell.
using SizeCounts = std::array<std::size_t, 3>;

/// R1: >= 1 large or >= 2 medium; R2: exactly one medium; R3: >= 2 small;
/// R4: at most one small dot. Rules are tried in that order.
constexpr CellCategory categorize_cell(const SizeCounts& c) noexcept {
    const auto [small, medium, large] = c;
    if (large >= 1 || medium >= 2) return CellCategory::R1;
    if (medium == 1) return CellCategory::R2;
    if (small >= 2) return CellCategory::R3;
    return CellCategory::R4;
}

enum class WeightsMode { mean_size, unit };

inline WeightsMode parse_weights_mode(std::string_view s) {
    if (s == "mean_size") return WeightsMode::mean_size;
    if (s == "unit") return WeightsMode::unit;
    throw ValidationError("unknown weights mode '" + std::string(s) + "'");
}

inline std::string_view to_string(WeightsMode m) noexcept { return m == WeightsMode::unit ? "unit" : "mean_size"; }

/// Rows x cols tiling of the test paper. Cell id = row * cols + col.
class CellGrid {
public:
    CellGrid() = default;
    CellGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), counts_(rows * cols, SizeCounts{}),
                                                   categories_(rows * cols, CellCategory::R4) {
        if (rows < 2 || cols < 2) throw ParameterError("cell grid needs at least 2 rows and 2 columns");
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_ * cols_; }

    [[nodiscard]] const SizeCounts& counts(std::size_t id) const noexcept { return counts_[id]; }
    SizeCounts& counts(std::size_t id) noexcept { return counts_[id]; }
    [[nodiscard]] CellCategory category(std::size_t id) const noexcept { return categories_[id]; }
    void set_category(std::size_t id, CellCategory c) noexcept { categories_[id] = c; }

    [[nodiscard]] const std::array<double, 3>& weights() const noexcept { return weights_; }
    void set_weights(const std::array<double, 3>& w) noexcept { weights_ = w; }

    /// Center in cell units: (row + 0.5, col + 0.5).
    [[nodiscard]] std::pair<double, double> center(std::size_t id) const noexcept {
        return {static_cast<double>(id / cols_) + 0.5, static_cast<double>(id % cols_) + 0.5};
    }

    /// Cells whose category is in `accepted`, ascending id.
    [[nodiscard]] std::vector<std::size_t> select(const std::vector<CellCategory>& accepted) const {
        std::vector<std::size_t> out;
        for (std::size_t id = 0; id < size(); ++id)
            if (std::find(accepted.begin(), accepted.end(), categories_[id]) != accepted.end()) out.push_back(id);
        return out;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<SizeCounts> counts_;
    std::vector<CellCategory> categories_;
    std::array<double, 3> weights_{1.0, 1.0, 1.0};
};

inline void categorize_cells(CellGrid& grid) {
    for (std::size_t id = 0; id < grid.size(); ++id) grid.set_category(id, categorize_cell(grid.counts(id)));
}

/// Fallback per-category weights when a category has no dots.
inline constexpr std::array<double, 3> kFallbackWeights{1.0, 4.0, 16.0};

/// Per-category mean pixel count over all dots.
inline std::array<double, 3> category_weights(const std::vector<Dot>& dots, WeightsMode mode) {
    if (mode == WeightsMode::unit) return {1.0, 1.0, 1.0};
    std::array<double, 3> sum{};
    std::array<std::size_t, 3> n{};
    for (const auto& d : dots) {
        const auto c = static_cast<std::size_t>(d.category);
        sum[c] += static_cast<double>(d.pixel_count);
        ++n[c];
    }
    std::array<double, 3> w{};
    for (std::size_t c = 0; c < 3; ++c) w[c] = n[c] == 0 ? kFallbackWeights[c] : sum[c] / static_cast<double>(n[c]);
    return w;
}

/// Cell index of a coordinate along an axis of `extent` pixels split into
/// `cells` parts; boundaries go to the higher cell, the last cell takes the
/// remainder.
inline std::size_t cell_index(double coord, int extent, std::size_t cells) noexcept {
    const double pos = std::floor(coord * static_cast<double>(cells) / static_cast<double>(extent));
    if (pos < 0.0) return 0;
    return std::min(static_cast<std::size_t>(pos), cells - 1);
}

/// Assigns each categorized dot to the cell containing its centroid, then
/// categorizes the cells. `width` x `height` is the paper extent in pixels.
inline CellGrid build_grid(const std::vector<Dot>& dots, int width, int height, std::size_t rows, std::size_t cols,
                           WeightsMode mode) {
    if (width <= 0 || height <= 0) throw GeometryError("paper area is degenerate");
    CellGrid grid(rows, cols);
    for (const auto& d : dots) {
        const std::size_t r = cell_index(d.centroid.y, height, rows);
        const std::size_t c = cell_index(d.centroid.x, width, cols);
        ++grid.counts(r * cols + c)[static_cast<std::size_t>(d.category)];
    }
    grid.set_weights(category_weights(dots, mode));
    categorize_cells(grid);
    return grid;
}

/// sqrt(sum_i (w_i (u_i - v_i))^2)
inline double weighted_distance(const SizeCounts& u, const SizeCounts& v, const std::array<double, 3>& w) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double diff = w[i] * (static_cast<double>(u[i]) - static_cast<double>(v[i]));
        s += diff * diff;
    }
    return std::sqrt(s);
}

/// HC tree over all cells under the weighted count distance.
inline Dendrogram cell_hc_view(const CellGrid& grid, Linkage linkage) {
    const auto dist = DistanceMatrix::from_function(grid.size(), [&](std::size_t a, std::size_t b) {
        return weighted_distance(grid.counts(a), grid.counts(b), grid.weights());
    });
    return hc_cluster(dist, linkage);
}

// ---------------------------------------------------------------------------
// Minimum spanning trees over cell centers

struct MstEdge {
    std::size_t u = 0;  // cell ids, u <= v
    std::size_t v = 0;
    double length = 0.0;
};

struct Mst {
    std::vector<std::size_t> nodes;  // ascending cell ids (repeats allowed)
    std::vector<MstEdge> edges;      // sorted by (u, v)
    double total_weight = 0.0;
};

/// MST of the complete graph on the selected cells with Euclidean center
/// distances in cell units. Edges are totally ordered by (squared length,
/// smaller endpoint, larger endpoint), which makes the tree unique; Prim's
/// algorithm under that order returns it in O(k^2).
inline Mst build_mst(std::vector<std::size_t> cells, std::size_t grid_cols) {
    if (cells.size() < 2) throw ParameterError("an MST needs at least two cells");
    if (grid_cols == 0) throw ParameterError("grid must have columns");
    std::sort(cells.begin(), cells.end());
    const std::size_t k = cells.size();
    std::vector<long long> row(k), col(k);
    for (std::size_t i = 0; i < k; ++i) {
        row[i] = static_cast<long long>(cells[i] / grid_cols);
        col[i] = static_cast<long long>(cells[i] % grid_cols);
    }
    using Key = std::tuple<long long, std::size_t, std::size_t>;  // (d2, lo, hi) in node positions
    auto edge_key = [&](std::size_t a, std::size_t b) {
        const long long dr = row[a] - row[b];
        const long long dc = col[a] - col[b];
        return Key{dr * dr + dc * dc, std::min(a, b), std::max(a, b)};
    };

    const Key none{std::numeric_limits<long long>::max(), k, k};
    std::vector<Key> best(k, none);
    std::vector<char> in_tree(k, 0);
    Mst mst;
    mst.nodes = cells;
    in_tree[0] = 1;
    for (std::size_t v = 1; v < k; ++v) best[v] = edge_key(0, v);
    for (std::size_t step = 1; step < k; ++step) {
        std::size_t next = k;
        for (std::size_t v = 0; v < k; ++v)
            if (!in_tree[v] && (next == k || best[v] < best[next])) next = v;
        const auto [d2, a, b] = best[next];
        mst.edges.push_back({cells[a], cells[b], std::sqrt(static_cast<double>(d2))});
        in_tree[next] = 1;
        for (std::size_t v = 0; v < k; ++v) {
            if (in_tree[v]) continue;
            const Key cand = edge_key(next, v);
            if (cand < best[v]) best[v] = cand;
        }
    }
    std::sort(mst.edges.begin(), mst.edges.end(), [](const MstEdge& x, const MstEdge& y) {
        return std::tie(x.u, x.v, x.length) < std::tie(y.u, y.v, y.length);
    });
    for (const auto& e : mst.edges) mst.total_weight += e.length;
    return mst;
}

/// Sorted immediate-neighbour distances of an MST.
inline std::vector<double> edge_distribution(const Mst& mst) {
    std::vector<double> lengths;
    lengths.reserve(mst.edges.size());
    for (const auto& e : mst.edges) lengths.push_back(e.length);
    std::sort(lengths.begin(), lengths.end());
    return lengths;
}

}  // namespace spraydot

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spraydot/auc.hpp"
#include "spraydot/cluster.hpp"
#include "spraydot/error.hpp"
#include "spraydot/parallel.hpp"
#include "spraydot/random.hpp"
#include "spraydot/spatial.hpp"

namespace spraydot {

enum class Sampling { without_replacement, with_replacement };

inline Sampling parse_sampling(std::string_view s) {
    if (s == "without_replacement") return Sampling::without_replacement;
    if (s == "with_replacement") return Sampling::with_replacement;
    throw ValidationError("unknown sampling mode '" + std::string(s) + "'");
}

inline std::string_view to_string(Sampling s) noexcept {
    return s == Sampling::with_replacement ? "with_replacement" : "without_replacement";
}

enum class Binning { equal_width, equal_frequency };

inline Binning parse_binning(std::string_view s) {
    if (s == "equal_width") return Binning::equal_width;
    if (s == "equal_frequency") return Binning::equal_frequency;
    throw ValidationError("unknown binning '" + std::string(s) + "'");
}

inline std::string_view to_string(Binning b) noexcept {
    return b == Binning::equal_frequency ? "equal_frequency" : "equal_width";
}

/// Observed MST plus B MSTs over uniformly drawn cell sets of the same size.
struct Ensemble {
    Mst observed;
    std::vector<Mst> simulated;
    std::size_t cells = 0;  // N
    std::size_t k = 0;
    std::uint64_t seed = 0;
};

/// B replicate MSTs, each over k cells drawn uniformly from the rows x cols
/// grid. Replicate b uses child_seed(seed, b), so the ensemble is identical for
/// any thread count.
inline std::vector<Mst> simulate_msts(std::size_t rows, std::size_t cols, std::size_t k, std::size_t replicates,
                                      std::uint64_t seed, Sampling sampling = Sampling::without_replacement) {
    const std::size_t n = rows * cols;
    if (k < 2) throw ParameterError("simulation needs k >= 2 cells");
    if (sampling == Sampling::without_replacement && k > n)
        throw ParameterError("cannot draw " + std::to_string(k) + " distinct cells from " + std::to_string(n));
    if (replicates < 1) throw ParameterError("simulation needs B >= 1");
    std::vector<Mst> out(replicates);
    parallel_for(replicates, [&](std::size_t b) {
        Rng rng(child_seed(seed, b));
        auto cells = sampling == Sampling::without_replacement ? rng.sample_without_replacement(n, k)
                                                               : rng.sample_with_replacement(n, k);
        out[b] = build_mst(std::move(cells), cols);
    });
    return out;
}

inline Ensemble simulate_ensemble(const std::vector<std::size_t>& observed_cells, std::size_t rows, std::size_t cols,
                                  std::size_t replicates, std::uint64_t seed,
                                  Sampling sampling = Sampling::without_replacement) {
    Ensemble e;
    e.observed = build_mst(observed_cells, cols);
    e.cells = rows * cols;
    e.k = observed_cells.size();
    e.seed = seed;
    e.simulated = simulate_msts(rows, cols, e.k, replicates, seed, sampling);
    return e;
}

/// AUC of an observed edge-length distribution against a simulated one:
/// probability that a simulated length exceeds an observed length. Values
/// near 1 mean the observed tree is tighter than uniform.
inline double auc(const std::vector<double>& observed, const std::vector<double>& simulated) {
    return mann_whitney_auc(observed, simulated);
}

inline constexpr std::size_t kHistogramBins = 10;

/// Row 0 is the observed MST, rows 1..B the replicates.
struct HistogramMatrix {
    std::vector<double> edges;  // kHistogramBins + 1
    std::vector<std::array<std::size_t, kHistogramBins>> rows;
    std::optional<std::string> warning;
};

/// Bin of x given edges: edges[i] <= x < edges[i+1], top edge inclusive.
inline std::size_t bin_of(double x, const std::vector<double>& edges) noexcept {
    const auto first = edges.begin() + 1;
    const auto last = edges.end() - 1;
    return static_cast<std::size_t>(std::upper_bound(first, last, x) - first);
}

/// Pools every edge length of the ensemble and bins each tree's lengths on
/// common boundaries: equal-width over the pooled [min, max] by default, or
/// pooled quantiles.
inline HistogramMatrix histogram_matrix(const std::vector<std::vector<double>>& distributions,
                                        Binning binning = Binning::equal_width) {
    std::vector<double> pooled;
    for (const auto& d : distributions) pooled.insert(pooled.end(), d.begin(), d.end());
    if (pooled.empty()) throw DataError("histogram matrix of empty distributions");
    std::sort(pooled.begin(), pooled.end());
    const double lo = pooled.front();
    const double hi = pooled.back();

    HistogramMatrix m;
    m.edges.resize(kHistogramBins + 1);
    if (hi == lo) {
        for (std::size_t i = 0; i <= kHistogramBins; ++i) m.edges[i] = lo + 0.1 * static_cast<double>(i);
        m.warning = "all pooled edge lengths are identical: every count is placed in bin 0";
    } else if (binning == Binning::equal_width) {
        const double width = (hi - lo) / static_cast<double>(kHistogramBins);
        for (std::size_t i = 0; i < kHistogramBins; ++i) m.edges[i] = lo + width * static_cast<double>(i);
        m.edges[kHistogramBins] = hi;
    } else {
        for (std::size_t i = 0; i <= kHistogramBins; ++i) {
            const std::size_t pos = std::min(pooled.size() - 1, i * (pooled.size() - 1) / kHistogramBins);
            m.edges[i] = pooled[pos];
        }
    }
    m.rows.reserve(distributions.size());
    for (const auto& d : distributions) {
        std::array<std::size_t, kHistogramBins> row{};
        for (const double x : d) ++row[bin_of(x, m.edges)];
        m.rows.push_back(row);
    }
    return m;
}

inline HistogramMatrix histogram_matrix(const Ensemble& e, Binning binning = Binning::equal_width) {
    std::vector<std::vector<double>> distributions;
    distributions.reserve(e.simulated.size() + 1);
    distributions.push_back(edge_distribution(e.observed));
    for (const auto& mst : e.simulated) distributions.push_back(edge_distribution(mst));
    return histogram_matrix(distributions, binning);
}

struct PoResult {
    double po = 1.0;                  // PO of the observed row
    std::vector<double> po_ensemble;  // PO of rows 1..B
    double p_value = 1.0;
    LeafCode observed_code;
    Dendrogram tree;
};

/// p = #{b : PO(M_b) < PO(M_obs)} / B, strict inequality.
inline double po_p_value(double observed, const std::vector<double>& ensemble) {
    if (ensemble.empty()) throw DataError("p-value needs at least one replicate");
    const auto below = std::count_if(ensemble.begin(), ensemble.end(), [&](double po) { return po < observed; });
    return static_cast<double>(below) / static_cast<double>(ensemble.size());
}

/// HC tree over the rows of the histogram matrix (Euclidean), product of odds
/// for every leaf, and the observed row's tree p-value.
inline PoResult po_p_value(const HistogramMatrix& matrix, Linkage linkage) {
    if (matrix.rows.size() < 2) throw DataError("tree p-value needs at least one replicate");
    PoResult out;
    out.tree = hc_cluster(euclidean_distances(matrix.rows), linkage);
    std::vector<double> po(matrix.rows.size());
    parallel_for(po.size(), [&](std::size_t leaf) { po[leaf] = product_of_odds(leaf_code(out.tree, leaf)); });
    out.observed_code = leaf_code(out.tree, 0);
    out.po = po[0];
    out.po_ensemble.assign(po.begin() + 1, po.end());
    out.p_value = po_p_value(out.po, out.po_ensemble);
    return out;
}

/// A cumulative density scale such as R1 or R1+R2.
struct Scale {
    std::string label;
    std::vector<CellCategory> categories;
};

inline Scale parse_scale(std::string_view text) {
    Scale s;
    s.label = std::string(text);
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto plus = text.find('+', start);
        const auto token = text.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
        s.categories.push_back(parse_cell_category(token));
        if (plus == std::string_view::npos) break;
        start = plus + 1;
    }
    return s;
}

struct UniformnessOptions {
    std::size_t replicates = 500;
    std::uint64_t seed = 0;
    Linkage linkage = Linkage::complete;
    Sampling sampling = Sampling::without_replacement;
    Binning binning = Binning::equal_width;
};

struct UniformnessReport {
    std::string scale;
    std::vector<std::size_t> cells;  // selected cell ids
    std::size_t k = 0;
    bool skipped = false;
    std::string notice;

    UniformnessOptions options;
    Mst observed;
    std::vector<double> auc_values;
    double auc_mean = 0.0;
    double auc_frac_above_075 = 0.0;
    HistogramMatrix matrix;
    PoResult tree;
};

/// Full test of one selected cell set against its uniform ensemble.
inline UniformnessReport test_uniformness(const CellGrid& grid, const std::vector<std::size_t>& cells,
                                          const std::string& label, const UniformnessOptions& options) {
    UniformnessReport r;
    r.scale = label;
    r.cells = cells;
    r.k = cells.size();
    r.options = options;
    const Ensemble e =
        simulate_ensemble(cells, grid.rows(), grid.cols(), options.replicates, options.seed, options.sampling);
    r.observed = e.observed;
    const auto observed_lengths = edge_distribution(e.observed);
    r.auc_values.resize(e.simulated.size());
    parallel_for(e.simulated.size(),
                 [&](std::size_t b) { r.auc_values[b] = auc(observed_lengths, edge_distribution(e.simulated[b])); });
    double sum = 0.0;
    std::size_t above = 0;
    for (const double a : r.auc_values) {
        sum += a;
        above += a > 0.75 ? 1 : 0;
    }
    r.auc_mean = sum / static_cast<double>(r.auc_values.size());
    r.auc_frac_above_075 = static_cast<double>(above) / static_cast<double>(r.auc_values.size());
    r.matrix = histogram_matrix(e, options.binning);
    r.tree = po_p_value(r.matrix, options.linkage);
    return r;
}

/// Runs every scale in order. All scales share the master seed, so each scale's
/// ensemble is reproducible on its own. Scales selecting fewer than two cells
/// are reported as skipped.
inline std::vector<UniformnessReport> run_scales(const CellGrid& grid, const std::vector<Scale>& scales,
                                                 const UniformnessOptions& options) {
    std::vector<UniformnessReport> out;
    for (const auto& scale : scales) {
        const auto cells = grid.select(scale.categories);
        if (cells.size() < 2) {
            UniformnessReport r;
            r.scale = scale.label;
            r.cells = cells;
            r.k = cells.size();
            r.options = options;
            r.skipped = true;
            r.notice = "scale " + scale.label + " selects " + std::to_string(cells.size()) +
                       " cell(s); at least 2 are needed for an MST";
            out.push_back(std::move(r));
            continue;
        }
        out.push_back(test_uniformness(grid, cells, scale.label, options));
    }
    return out;
}

}  // namespace spraydot

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "spraydot/size_stats.hpp"
#include "spraydot/spatial.hpp"
#include "spraydot/svg.hpp"
#include "spraydot/uniformness.hpp"

namespace spraydot::plots {

inline constexpr double kWidth = 720;
inline constexpr double kHeight = 460;

namespace detail {

inline svg::Frame standard_frame(svg::Document& doc, double x0, double x1, double y0, double y1) {
    return svg::Frame(doc, 70, 50, kWidth - 100, kHeight - 110, x0, x1, y0, y1);
}

inline std::string_view category_fill(CellCategory c) {
    switch (c) {
        case CellCategory::R1: return "#b2182b";
        case CellCategory::R2: return "#ef8a62";
        case CellCategory::R3: return "#fddbc7";
        case CellCategory::R4: return "#f7f7f7";
    }
    return "#f7f7f7";
}

}  // namespace detail

/// Pixel-count histogram as a density, with the Poisson pmf at lambda.
inline svg::Document count_fit(std::span<const double> counts, double lambda, const std::vector<double>& pmf) {
    svg::Document doc(kWidth, kHeight);
    const double hi = counts.empty() ? 1.0 : *std::max_element(counts.begin(), counts.end()) + 1.0;
    const Histogram h = histogram(counts, 30, 0.0, hi);
    const double width = h.edges[1] - h.edges[0];
    const auto n = static_cast<double>(std::max<std::size_t>(counts.size(), 1));
    double ymax = 0.0;
    for (const auto c : h.counts) ymax = std::max(ymax, static_cast<double>(c) / (n * width));
    const std::size_t kmax = std::min(pmf.size(), static_cast<std::size_t>(std::ceil(hi)) + 1);
    for (std::size_t k = 0; k < kmax; ++k) ymax = std::max(ymax, pmf[k]);
    auto frame = detail::standard_frame(doc, 0.0, hi, 0.0, ymax * 1.05);
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        frame.bar(h.edges[b], h.edges[b + 1], static_cast<double>(h.counts[b]) / (n * width), "#9e9ac8");
    std::vector<std::pair<double, double>> line;
    const std::size_t step = std::max<std::size_t>(1, kmax / 2000);
    for (std::size_t k = 0; k < kmax; k += step) line.emplace_back(frame.px(static_cast<double>(k)), frame.py(pmf[k]));
    doc.polyline(line, "#d62728");
    frame.axes("pixel count", "density");
    doc.text(kWidth / 2, 24, fmt::format("Dot pixel counts, Poisson fit (lambda = {:.4g})", lambda), 14, "middle");
    return doc;
}

/// Radius histogram with the fitted Exponential density and a Gaussian KDE.
inline svg::Document radius_fit(std::span<const double> radii, double rate) {
    svg::Document doc(kWidth, kHeight);
    const double hi = radii.empty() ? 1.0 : *std::max_element(radii.begin(), radii.end());
    const Histogram h = histogram(radii, 30, 0.0, hi);
    const double width = h.edges[1] - h.edges[0];
    const auto n = static_cast<double>(std::max<std::size_t>(radii.size(), 1));
    const double bw = silverman_bandwidth(radii);
    double ymax = rate;
    for (const auto c : h.counts) ymax = std::max(ymax, static_cast<double>(c) / (n * width));
    auto frame = detail::standard_frame(doc, 0.0, h.edges.back(), 0.0, ymax * 1.05);
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        frame.bar(h.edges[b], h.edges[b + 1], static_cast<double>(h.counts[b]) / (n * width), "#9e9ac8");
    std::vector<std::pair<double, double>> density, kde;
    for (int i = 0; i <= 200; ++i) {
        const double x = h.edges.back() * i / 200.0;
        density.emplace_back(frame.px(x), frame.py(std::min(exponential_density(x, rate), ymax * 1.05)));
        if (!radii.empty()) kde.emplace_back(frame.px(x), frame.py(std::min(gaussian_kde(radii, bw, x), ymax * 1.05)));
    }
    doc.polyline(density, "#d62728");
    doc.polyline(kde, "#2ca02c", 1.5, "6,4");
    frame.axes("radius (px)", "density");
    doc.text(kWidth / 2, 24, fmt::format("Dot radii, Exponential fit (rate = {:.4g})", rate), 14, "middle");
    return doc;
}

inline svg::Document qq(const std::vector<QqPoint>& points) {
    svg::Document doc(kWidth, kHeight);
    double hi = 1e-9;
    for (const auto& p : points) hi = std::max({hi, p.theoretical, p.empirical});
    auto frame = detail::standard_frame(doc, 0.0, hi, 0.0, hi);
    doc.line(frame.px(0), frame.py(0), frame.px(hi), frame.py(hi), "#888", 1.0, "4,4");
    for (const auto& p : points) doc.circle(frame.px(p.theoretical), frame.py(p.empirical), 2.0, "#3f007d");
    frame.axes("Exponential quantile", "observed radius");
    doc.text(kWidth / 2, 24, "Exponential QQ plot of dot radii", 14, "middle");
    return doc;
}

/// Paper-shaped drawing of the cell grid coloured by category, with the dots
/// at their centroids and, optionally, an MST over the selected cells.
inline svg::Document grid_overlay(const CellGrid& grid, int paper_width, int paper_height,
                                  const std::vector<std::pair<double, double>>& dot_centroids,
                                  const std::vector<double>& dot_radii, const Mst* mst = nullptr,
                                  const std::string& title = "") {
    const double scale = std::min(900.0 / paper_width, 600.0 / paper_height);
    const double w = paper_width * scale, h = paper_height * scale;
    svg::Document doc(w + 40, h + 60);
    const double ox = 20, oy = 40;
    const double cw = w / static_cast<double>(grid.cols()), ch = h / static_cast<double>(grid.rows());
    for (std::size_t id = 0; id < grid.size(); ++id) {
        const double x = ox + static_cast<double>(id % grid.cols()) * cw;
        const double y = oy + static_cast<double>(id / grid.cols()) * ch;
        doc.rect(x, y, cw, ch, detail::category_fill(grid.category(id)), "#bbb", 0.5);
    }
    for (std::size_t i = 0; i < dot_centroids.size(); ++i)
        doc.circle(ox + dot_centroids[i].first * scale, oy + dot_centroids[i].second * scale,
                   std::max(0.6, dot_radii[i] * scale), "#54278f");
    if (mst) {
        auto center = [&](std::size_t id) {
            return std::pair{ox + (static_cast<double>(id % grid.cols()) + 0.5) * cw,
                             oy + (static_cast<double>(id / grid.cols()) + 0.5) * ch};
        };
        for (const auto& e : mst->edges) {
            const auto [x1, y1] = center(e.u);
            const auto [x2, y2] = center(e.v);
            doc.line(x1, y1, x2, y2, "#08519c", 2.0);
        }
        for (const auto id : mst->nodes) {
            const auto [x, y] = center(id);
            doc.circle(x, y, 3.0, "#08519c");
        }
    }
    doc.text(ox, 24, title.empty() ? "Cell categories (R1 darkest)" : title, 14);
    return doc;
}

/// Histogram of per-replicate AUC values with 0.5 marked.
inline svg::Document auc_histogram(const std::vector<double>& values, const std::string& scale) {
    svg::Document doc(kWidth, kHeight);
    const Histogram h = histogram(values, 20, 0.0, 1.0);
    double ymax = 1.0;
    for (const auto c : h.counts) ymax = std::max(ymax, static_cast<double>(c));
    auto frame = detail::standard_frame(doc, 0.0, 1.0, 0.0, ymax * 1.05);
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        frame.bar(h.edges[b], h.edges[b + 1], static_cast<double>(h.counts[b]), "#6baed6");
    doc.line(frame.px(0.5), frame.py(0), frame.px(0.5), frame.py(ymax * 1.05), "#d62728", 1.5, "6,4");
    frame.axes("AUC (simulated vs observed edge lengths)", "replicates");
    doc.text(kWidth / 2, 24, fmt::format("AUC per replicate, scale {}", scale), 14, "middle");
    return doc;
}

/// (B+1) x 10 histogram matrix, rows in dendrogram leaf order; the observed
/// row is outlined.
inline svg::Document heatmap(const HistogramMatrix& m, const Dendrogram& tree, const std::string& scale) {
    const auto order = tree.leaf_order();
    const double row_h = std::max(1.0, 600.0 / static_cast<double>(order.size()));
    const double cell_w = 50.0;
    const double ox = 60, oy = 40;
    svg::Document doc(ox + cell_w * kHistogramBins + 40, oy + row_h * static_cast<double>(order.size()) + 50);
    std::size_t vmax = 1;
    for (const auto& row : m.rows) vmax = std::max(vmax, *std::max_element(row.begin(), row.end()));
    double observed_y = oy;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& row = m.rows[order[r]];
        const double y = oy + row_h * static_cast<double>(r);
        if (order[r] == 0) observed_y = y;
        for (std::size_t b = 0; b < kHistogramBins; ++b) {
            const double t = static_cast<double>(row[b]) / static_cast<double>(vmax);
            const int level = static_cast<int>(std::lround(255.0 * (1.0 - t)));
            doc.rect(ox + cell_w * static_cast<double>(b), y, cell_w, row_h,
                     fmt::format("rgb({},{},255)", level, level));
        }
    }
    doc.rect(ox - 2, observed_y - 1, cell_w * kHistogramBins + 4, row_h + 2, "none", "#d62728", 2.0);
    doc.text(ox - 6, observed_y + row_h / 2 + 4, "obs", 10, "end", "#d62728");
    for (std::size_t b = 0; b < kHistogramBins; ++b)
        doc.text(ox + cell_w * (static_cast<double>(b) + 0.5), oy + row_h * static_cast<double>(order.size()) + 16,
                 fmt::format("{:.3g}", m.edges[b]), 9, "middle");
    doc.text(ox, 24, fmt::format("Edge-length histograms, scale {} (rows in tree order)", scale), 14);
    return doc;
}

}  // namespace spraydot::plots

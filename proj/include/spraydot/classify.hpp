#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spraydot/auc.hpp"
#include "spraydot/cluster.hpp"
#include "spraydot/color.hpp"
#include "spraydot/color_quant.hpp"
#include "spraydot/error.hpp"
#include "spraydot/nearest.hpp"
#include "spraydot/parallel.hpp"

namespace spraydot {

enum class PixelClass : std::uint8_t { yellow = 0, purple = 1 };

enum class Provenance : std::uint8_t {
    focal_split,
    cleaned,
    recovered_rgb,
    recovered_hsv,
    recovered_6d,
    fused,
};

inline std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::focal_split: return "focal-split";
        case Provenance::cleaned: return "cleaned";
        case Provenance::recovered_rgb: return "recovered-RGB";
        case Provenance::recovered_hsv: return "recovered-HSV";
        case Provenance::recovered_6d: return "recovered-6D";
        case Provenance::fused: return "fused";
    }
    return "fused";
}

inline Provenance recovered_provenance(ColorSpace space) noexcept {
    switch (space) {
        case ColorSpace::rgb: return Provenance::recovered_rgb;
        case ColorSpace::hsv: return Provenance::recovered_hsv;
        case ColorSpace::rgb_hsv: return Provenance::recovered_6d;
    }
    return Provenance::recovered_rgb;
}

/// Purple/yellow label and provenance for every pixel of a PixelGrid.
class LabelMask {
public:
    LabelMask() = default;
    LabelMask(int width, int height)
        : width_(width), height_(height),
          labels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), PixelClass::yellow),
          provenance_(labels_.size(), Provenance::focal_split) {}

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    [[nodiscard]] PixelClass label(std::size_t i) const noexcept { return labels_[i]; }
    [[nodiscard]] bool purple(std::size_t i) const noexcept { return labels_[i] == PixelClass::purple; }
    [[nodiscard]] bool purple(int x, int y) const noexcept { return purple(index(x, y)); }
    [[nodiscard]] Provenance provenance(std::size_t i) const noexcept { return provenance_[i]; }

    void set(std::size_t i, PixelClass c, Provenance p) noexcept {
        labels_[i] = c;
        provenance_[i] = p;
    }

    [[nodiscard]] std::size_t purple_count() const noexcept {
        return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), PixelClass::purple));
    }

    [[nodiscard]] bool same_shape(const LabelMask& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_;
    }

    friend bool operator==(const LabelMask&, const LabelMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<PixelClass> labels_;
    std::vector<Provenance> provenance_;
};

/// Row bands and square columns of the focal area, grid-local coordinates.
/// Bands too thin to hold two pixels per square are folded into a neighbour.
struct FocalLayout {
    Rect focal;
    std::vector<std::pair<int, int>> rows;  // [y0, y1)
    std::vector<std::pair<int, int>> cols;  // [x0, x1)

    [[nodiscard]] Rect square(std::size_t r, std::size_t c) const noexcept {
        return {cols[c].first, rows[r].first, cols[c].second - cols[c].first, rows[r].second - rows[r].first};
    }
    [[nodiscard]] std::size_t square_count() const noexcept { return rows.size() * cols.size(); }
};

inline FocalLayout make_layout(const RegionSpec& region, const PixelGrid& grid) {
    region.validate();
    const Rect focal = grid.to_local(region.focal_rect);
    if (!Rect{0, 0, grid.width(), grid.height()}.contains(focal))
        throw GeometryError("focal_rect lies outside the loaded paper area");
    FocalLayout layout;
    layout.focal = focal;
    const long long min_pixels = 2LL * region.squares_per_row;
    for (int r = 0; r < region.rows; ++r) {
        const int y0 = focal.y + static_cast<int>(static_cast<long long>(r) * focal.height / region.rows);
        const int y1 = focal.y + static_cast<int>(static_cast<long long>(r + 1) * focal.height / region.rows);
        if (y1 <= y0) continue;
        const bool thin = static_cast<long long>(y1 - y0) * focal.width < min_pixels;
        if (thin && !layout.rows.empty()) {
            layout.rows.back().second = y1;
        } else if (!layout.rows.empty() &&
                   static_cast<long long>(layout.rows.back().second - layout.rows.back().first) * focal.width <
                       min_pixels) {
            layout.rows.back().second = y1;  // a thin leading band absorbs its successor
        } else {
            layout.rows.emplace_back(y0, y1);
        }
    }
    for (int c = 0; c < region.squares_per_row; ++c) {
        const int x0 = focal.x + static_cast<int>(static_cast<long long>(c) * focal.width / region.squares_per_row);
        const int x1 =
            focal.x + static_cast<int>(static_cast<long long>(c + 1) * focal.width / region.squares_per_row);
        layout.cols.emplace_back(x0, x1);
    }
    return layout;
}

/// Root bifurcation of an HC tree over cube representatives: the branch with
/// fewer cubes is purple; equal cube counts fall back to fewer pixels; a full
/// tie picks the branch without cube 0.
inline std::vector<PixelClass> split_cubes(const std::vector<CubeCell>& cells, const DistanceMatrix& dist,
                                           Linkage linkage) {
    std::vector<PixelClass> out(cells.size(), PixelClass::yellow);
    if (cells.size() < 2) return out;
    const Dendrogram tree = hc_cluster(dist, linkage);
    const Merge& root = tree.merge_of(tree.root());
    const auto left = tree.leaves_under(root.left);
    const auto right = tree.leaves_under(root.right);
    auto pixels = [&](const std::vector<std::size_t>& leaves) {
        std::uint64_t s = 0;
        for (auto l : leaves) s += cells[l].count;
        return s;
    };
    bool left_purple;
    if (left.size() != right.size()) {
        left_purple = left.size() < right.size();
    } else {
        left_purple = pixels(left) < pixels(right);
    }
    for (auto l : left_purple ? left : right) out[l] = PixelClass::purple;
    return out;
}

struct RowSplit {
    std::vector<PixelClass> labels;  // one per input pixel
    std::size_t cubes = 0;
    std::size_t purple_cubes = 0;
};

/// Splits one focal row into purple and yellow by clustering the centroids of
/// the cubes its pixels occupy. A single occupied cube gives no evidence of a
/// second color, so everything stays yellow.
inline RowSplit split_row(const std::vector<ColorVec>& pixels, ColorSpace space, int n, Linkage linkage) {
    const ColorCubeIndex index = build_index(pixels, space, n);
    const auto cells = index.sorted_cells();
    const std::size_t d = dims(space);
    std::vector<ColorPoint> centroids;
    centroids.reserve(cells.size());
    for (const auto& c : cells) centroids.push_back(c.centroid());
    const auto dist = DistanceMatrix::from_function(cells.size(), [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = centroids[a][i] - centroids[b][i];
            s += diff * diff;
        }
        return std::sqrt(s);
    });
    const auto cube_labels = split_cubes(cells, dist, linkage);

    std::unordered_map<std::uint64_t, PixelClass> by_key;
    RowSplit result;
    result.cubes = cells.size();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        by_key.emplace(pack(cells[i].coord), cube_labels[i]);
        if (cube_labels[i] == PixelClass::purple) ++result.purple_cubes;
    }
    result.labels.reserve(pixels.size());
    for (const auto& p : pixels) result.labels.push_back(by_key.at(pack(quantize(p, n))));
    return result;
}

struct ValidationParams {
    double auc_min = 0.80;
    double frac_max = 0.5;
};

struct SquareCheck {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t purple = 0;
    std::size_t yellow = 0;
    double auc = 1.0;  // separability; 1 when undefined
    bool flagged = false;
};

/// Per-square separability check of a focal split.
///
/// Distances are measured from each pixel to the nearest center of a cube that
/// holds a yellow-labelled pixel anywhere in the focal area. Genuine purple
/// pixels sit far from every yellow cube, so the AUC of purple distances over
/// yellow distances approaches 1; a split that carved yellow tones into
/// "purple" lands near 0.5. Squares without purple pixels are never flagged.
inline std::vector<SquareCheck> validate_squares(const LabelMask& mask, const PixelGrid& grid,
                                                 const FocalLayout& layout, ColorSpace space, int n,
                                                 const ValidationParams& params) {
    const std::size_t d = dims(space);
    ColorCubeIndex yellow_cubes(space, n);
    for (int y = layout.focal.y; y < layout.focal.bottom(); ++y)
        for (int x = layout.focal.x; x < layout.focal.right(); ++x) {
            const auto i = grid.index(x, y);
            if (!mask.purple(i)) yellow_cubes.add(color_of(grid, i, space));
        }
    std::vector<ColorPoint> centers;
    for (const auto& cell : yellow_cubes.sorted_cells()) centers.push_back(cube_center(cell.coord, n, d));
    const KdTree yellow_tree(std::move(centers), d);

    std::vector<SquareCheck> out(layout.square_count());
    parallel_for(out.size(), [&](std::size_t s) {
        const std::size_t r = s / layout.cols.size();
        const std::size_t c = s % layout.cols.size();
        const Rect sq = layout.square(r, c);
        SquareCheck check;
        check.row = r;
        check.col = c;
        std::vector<double> purple_d;
        std::vector<double> yellow_d;
        for (int y = sq.y; y < sq.bottom(); ++y)
            for (int x = sq.x; x < sq.right(); ++x) {
                const auto i = grid.index(x, y);
                const ColorVec v = color_of(grid, i, space);
                ColorPoint p{};
                for (std::size_t k = 0; k < d; ++k) p[k] = v[k];
                const double dist = yellow_tree.empty() ? 0.0 : std::sqrt(yellow_tree.nearest_sq(p));
                (mask.purple(i) ? purple_d : yellow_d).push_back(dist);
            }
        check.purple = purple_d.size();
        check.yellow = yellow_d.size();
        if (!purple_d.empty()) {
            const double frac = static_cast<double>(purple_d.size()) /
                                static_cast<double>(purple_d.size() + yellow_d.size());
            if (!yellow_d.empty()) check.auc = mann_whitney_auc(yellow_d, purple_d);
            check.flagged = check.auc < params.auc_min || frac > params.frac_max;
        }
        out[s] = check;
    });
    return out;
}

/// Relabels every pixel of the flagged squares yellow.
inline LabelMask clean_squares(LabelMask mask, const FocalLayout& layout, const std::vector<SquareCheck>& checks) {
    for (const auto& check : checks) {
        if (!check.flagged) continue;
        const Rect sq = layout.square(check.row, check.col);
        for (int y = sq.y; y < sq.bottom(); ++y)
            for (int x = sq.x; x < sq.right(); ++x)
                mask.set(mask.index(x, y), PixelClass::yellow, Provenance::cleaned);
    }
    return mask;
}

/// Cube centers that ever held a purple (resp. yellow) focal pixel.
struct ClassPalette {
    ColorSpace space = ColorSpace::rgb;
    int n = 1;
    std::vector<ColorPoint> purple_centers;
    std::vector<ColorPoint> yellow_centers;
};

/// Cubes that held pixels of both classes go to purple so that no part of a
/// dot is given up during recovery.
inline ClassPalette build_palette(const LabelMask& mask, const PixelGrid& grid, const Rect& focal, ColorSpace space,
                                  int n) {
    ColorCubeIndex purple(space, n);
    ColorCubeIndex yellow(space, n);
    for (int y = focal.y; y < focal.bottom(); ++y)
        for (int x = focal.x; x < focal.right(); ++x) {
            const auto i = grid.index(x, y);
            (mask.purple(i) ? purple : yellow).add(color_of(grid, i, space));
        }
    if (purple.empty()) throw DataError("no purple pixels in the focal area: nothing to recover from");
    const std::size_t d = dims(space);
    ClassPalette palette{space, n, {}, {}};
    for (const auto& cell : purple.sorted_cells()) palette.purple_centers.push_back(cube_center(cell.coord, n, d));
    for (const auto& cell : yellow.sorted_cells())
        if (purple.find(cell.coord) == nullptr) palette.yellow_centers.push_back(cube_center(cell.coord, n, d));
    return palette;
}

/// Nearest-center labelling against a fixed palette. Ties go to yellow.
class PaletteClassifier {
public:
    explicit PaletteClassifier(const ClassPalette& palette)
        : d_(dims(palette.space)),
          purple_(palette.purple_centers, dims(palette.space)),
          yellow_(palette.yellow_centers, dims(palette.space)) {}

    [[nodiscard]] PixelClass classify(const ColorVec& v) const {
        ColorPoint p{};
        for (std::size_t k = 0; k < d_; ++k) p[k] = v[k];
        return purple_.nearest_sq(p) < yellow_.nearest_sq(p) ? PixelClass::purple : PixelClass::yellow;
    }

private:
    std::size_t d_;
    KdTree purple_;
    KdTree yellow_;
};

/// Labels each pixel by its nearest palette center. Distinct colors are
/// classified once each.
inline std::vector<PixelClass> recover(const std::vector<ColorVec>& pixels, const ClassPalette& palette) {
    const PaletteClassifier classifier(palette);
    std::vector<std::uint64_t> keys;
    keys.reserve(pixels.size());
    for (const auto& p : pixels) keys.push_back(pack(p));
    std::vector<std::uint64_t> distinct = keys;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<PixelClass> distinct_labels(distinct.size());
    parallel_for(distinct.size(),
                 [&](std::size_t i) { distinct_labels[i] = classifier.classify(unpack(distinct[i])); });
    std::vector<PixelClass> out;
    out.reserve(pixels.size());
    for (const auto key : keys) {
        const auto it = std::lower_bound(distinct.begin(), distinct.end(), key);
        out.push_back(distinct_labels[static_cast<std::size_t>(it - distinct.begin())]);
    }
    return out;
}

/// Union of the purple sets. A pixel keeps its provenance when every mask that
/// contributed its label agrees on it, otherwise it is marked fused.
inline LabelMask fuse(const std::vector<LabelMask>& masks) {
    if (masks.empty()) throw GeometryError("nothing to fuse");
    for (const auto& m : masks)
        if (!m.same_shape(masks.front())) throw GeometryError("cannot fuse masks of different dimensions");
    LabelMask out(masks.front().width(), masks.front().height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        bool any_purple = false;
        for (const auto& m : masks) any_purple = any_purple || m.purple(i);
        const PixelClass cls = any_purple ? PixelClass::purple : PixelClass::yellow;
        bool first = true;
        Provenance prov = Provenance::fused;
        for (const auto& m : masks) {
            if (m.label(i) != cls) continue;
            if (first) {
                prov = m.provenance(i);
                first = false;
            } else if (m.provenance(i) != prov) {
                prov = Provenance::fused;
            }
        }
        out.set(i, cls, prov);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whole-paper classification

struct ClassPass {
    ColorSpace space = ColorSpace::rgb;
    int n = 1;        // cube edge for the recovery palette
    int split_n = 10; // cube edge for the focal row splits
};

struct ClassifyOptions {
    std::vector<ClassPass> passes{{ColorSpace::rgb, 1, 10}, {ColorSpace::hsv, 10, 10}};
    Linkage linkage = Linkage::average;
    ValidationParams validation;
};

struct PassResult {
    ClassPass pass;
    LabelMask mask;
    std::vector<SquareCheck> squares;
    std::size_t flagged = 0;
    std::size_t palette_purple = 0;
    std::size_t palette_yellow = 0;
    std::size_t focal_purple = 0;
};

struct Classification {
    FocalLayout layout;
    std::vector<PassResult> passes;
    LabelMask mask;  // fusion of all passes
};

/// Focal split, square validation and cleaning, palette, and recovery for one
/// color space.
inline PassResult classify_pass(const PixelGrid& grid, const FocalLayout& layout, const ClassPass& pass,
                                Linkage linkage, const ValidationParams& validation) {
    LabelMask mask(grid.width(), grid.height());
    const Rect& focal = layout.focal;

    std::vector<RowSplit> splits(layout.rows.size());
    parallel_for(layout.rows.size(), [&](std::size_t r) {
        std::vector<ColorVec> pixels;
        const auto [y0, y1] = layout.rows[r];
        pixels.reserve(static_cast<std::size_t>(y1 - y0) * static_cast<std::size_t>(focal.width));
        for (int y = y0; y < y1; ++y)
            for (int x = focal.x; x < focal.right(); ++x) pixels.push_back(color_of(grid, grid.index(x, y), pass.space));
        splits[r] = split_row(pixels, pass.space, pass.split_n, linkage);
    });
    for (std::size_t r = 0; r < layout.rows.size(); ++r) {
        std::size_t k = 0;
        for (int y = layout.rows[r].first; y < layout.rows[r].second; ++y)
            for (int x = focal.x; x < focal.right(); ++x)
                mask.set(grid.index(x, y), splits[r].labels[k++], Provenance::focal_split);
    }

    PassResult result;
    result.pass = pass;
    result.squares = validate_squares(mask, grid, layout, pass.space, pass.split_n, validation);
    result.flagged = static_cast<std::size_t>(
        std::count_if(result.squares.begin(), result.squares.end(), [](const auto& s) { return s.flagged; }));
    mask = clean_squares(std::move(mask), layout, result.squares);

    const ClassPalette palette = build_palette(mask, grid, focal, pass.space, pass.n);
    result.palette_purple = palette.purple_centers.size();
    result.palette_yellow = palette.yellow_centers.size();

    std::vector<std::size_t> outside;
    std::vector<ColorVec> colors;
    for (int y = 0; y < grid.height(); ++y)
        for (int x = 0; x < grid.width(); ++x) {
            if (focal.contains(x, y)) continue;
            outside.push_back(grid.index(x, y));
            colors.push_back(color_of(grid, outside.back(), pass.space));
        }
    const auto labels = recover(colors, palette);
    const Provenance prov = recovered_provenance(pass.space);
    for (std::size_t k = 0; k < outside.size(); ++k) mask.set(outside[k], labels[k], prov);

    for (int y = focal.y; y < focal.bottom(); ++y)
        for (int x = focal.x; x < focal.right(); ++x) result.focal_purple += mask.purple(grid.index(x, y)) ? 1 : 0;
    result.mask = std::move(mask);
    return result;
}

inline Classification classify_image(const PixelGrid& grid, const RegionSpec& region, const ClassifyOptions& options) {
    if (options.passes.empty()) throw ValidationError("classification needs at least one pass");
    Classification out;
    out.layout = make_layout(region, grid);
    std::vector<LabelMask> masks;
    for (const auto& pass : options.passes) {
        out.passes.push_back(classify_pass(grid, out.layout, pass, options.linkage, options.validation));
        masks.push_back(out.passes.back().mask);
    }
    out.mask = fuse(masks);
    return out;
}

}  // namespace spraydot

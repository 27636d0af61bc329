#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spraydot/color.hpp"
#include "spraydot/error.hpp"

namespace spraydot {

enum class ColorSpace { rgb, hsv, rgb_hsv };

inline constexpr std::size_t kMaxColorDims = 6;

constexpr std::size_t dims(ColorSpace space) noexcept { return space == ColorSpace::rgb_hsv ? 6 : 3; }

inline std::string_view to_string(ColorSpace space) noexcept {
    switch (space) {
        case ColorSpace::rgb: return "rgb";
        case ColorSpace::hsv: return "hsv";
        case ColorSpace::rgb_hsv: return "rgb+hsv";
    }
    return "rgb";
}

inline ColorSpace parse_color_space(std::string_view s) {
    if (s == "rgb" || s == "RGB") return ColorSpace::rgb;
    if (s == "hsv" || s == "HSV") return ColorSpace::hsv;
    if (s == "rgb+hsv" || s == "RGB+HSV" || s == "6d") return ColorSpace::rgb_hsv;
    throw ValidationError("unknown color space '" + std::string(s) + "'");
}

/// A pixel's coordinates in one of the color spaces; only the first
/// dims(space) channels are meaningful, the rest stay zero.
using ColorVec = std::array<std::uint8_t, kMaxColorDims>;
using CubeCoord = std::array<std::uint8_t, kMaxColorDims>;
using ColorPoint = std::array<double, kMaxColorDims>;

inline ColorVec color_of(const PixelGrid& grid, std::size_t i, ColorSpace space) noexcept {
    const Rgb& c = grid.rgb()[i];
    const Hsv& h = grid.hsv()[i];
    switch (space) {
        case ColorSpace::rgb: return {c.r, c.g, c.b, 0, 0, 0};
        case ColorSpace::hsv: return {h.h, h.s, h.v, 0, 0, 0};
        case ColorSpace::rgb_hsv: return {c.r, c.g, c.b, h.h, h.s, h.v};
    }
    return {};
}

/// Number of cubes of edge n along one axis of [0,256); the last may be partial.
constexpr std::size_t cubes_per_axis(int n) noexcept {
    return (256 + static_cast<std::size_t>(n) - 1) / static_cast<std::size_t>(n);
}

constexpr CubeCoord quantize(const ColorVec& pixel, int n) noexcept {
    CubeCoord out{};
    for (std::size_t i = 0; i < kMaxColorDims; ++i)
        out[i] = static_cast<std::uint8_t>(pixel[i] / n);
    return out;
}

constexpr std::uint64_t pack(const CubeCoord& c) noexcept {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < kMaxColorDims; ++i) key = (key << 8) | c[i];
    return key;
}

constexpr CubeCoord unpack(std::uint64_t key) noexcept {
    CubeCoord c{};
    for (std::size_t i = kMaxColorDims; i-- > 0;) {
        c[i] = static_cast<std::uint8_t>(key & 0xFF);
        key >>= 8;
    }
    return c;
}

/// Geometric center of a cube: coordinate*n + n/2 per axis. A partial last
/// cube whose nominal center would reach 256 uses the midpoint of its actual
/// extent instead.
inline ColorPoint cube_center(const CubeCoord& c, int n, std::size_t d) noexcept {
    ColorPoint p{};
    for (std::size_t i = 0; i < d; ++i) {
        const double lo = static_cast<double>(c[i]) * n;
        double center = lo + n / 2.0;
        if (center >= 256.0) center = (lo + 256.0) / 2.0;
        p[i] = center;
    }
    return p;
}

/// Occupancy record of a single cube. Channel sums are kept as integers so the
/// centroid is exact and merges are associative.
struct CubeCell {
    CubeCoord coord{};
    std::uint64_t count = 0;
    std::array<std::uint64_t, kMaxColorDims> sum{};

    [[nodiscard]] ColorPoint centroid() const noexcept {
        ColorPoint p{};
        if (count == 0) return p;
        for (std::size_t i = 0; i < kMaxColorDims; ++i)
            p[i] = static_cast<double>(sum[i]) / static_cast<double>(count);
        return p;
    }
};

/// Occupied n x n x n (or n^6) color cubes with counts and centers of mass.
class ColorCubeIndex {
public:
    ColorCubeIndex(ColorSpace space, int n) : space_(space), n_(n) {
        if (n < 1 || n > 256) throw ValidationError("cube edge n must be in [1, 256]");
    }

    void add(const ColorVec& pixel) {
        const CubeCoord coord = quantize(pixel, n_);
        auto [it, inserted] = cells_.try_emplace(pack(coord));
        CubeCell& cell = it->second;
        if (inserted) cell.coord = coord;
        ++cell.count;
        for (std::size_t i = 0; i < kMaxColorDims; ++i) cell.sum[i] += pixel[i];
        ++total_;
    }

    /// Combines with an index built over a disjoint pixel set.
    void merge(const ColorCubeIndex& other) {
        if (other.space_ != space_ || other.n_ != n_)
            throw ValidationError("cannot merge color indexes of different space or scale");
        for (const auto& [key, src] : other.cells_) {
            auto [it, inserted] = cells_.try_emplace(key, src);
            if (!inserted) {
                it->second.count += src.count;
                for (std::size_t i = 0; i < kMaxColorDims; ++i) it->second.sum[i] += src.sum[i];
            }
        }
        total_ += other.total_;
    }

    [[nodiscard]] const CubeCell* find(const CubeCoord& coord) const {
        const auto it = cells_.find(pack(coord));
        return it == cells_.end() ? nullptr : &it->second;
    }

    /// Occupied cells ordered by cube coordinate.
    [[nodiscard]] std::vector<CubeCell> sorted_cells() const {
        std::vector<std::pair<std::uint64_t, const CubeCell*>> keyed;
        keyed.reserve(cells_.size());
        for (const auto& [key, cell] : cells_) keyed.emplace_back(key, &cell);
        std::sort(keyed.begin(), keyed.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<CubeCell> out;
        out.reserve(keyed.size());
        for (const auto& kv : keyed) out.push_back(*kv.second);
        return out;
    }

    [[nodiscard]] ColorSpace space() const noexcept { return space_; }
    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] std::size_t dims() const noexcept { return spraydot::dims(space_); }
    [[nodiscard]] std::size_t occupied() const noexcept { return cells_.size(); }
    [[nodiscard]] std::uint64_t pixel_count() const noexcept { return total_; }
    [[nodiscard]] bool empty() const noexcept { return cells_.empty(); }

private:
    ColorSpace space_;
    int n_;
    std::unordered_map<std::uint64_t, CubeCell> cells_;
    std::uint64_t total_ = 0;
};

template <typename Range>
ColorCubeIndex build_index(const Range& pixels, ColorSpace space, int n) {
    ColorCubeIndex index(space, n);
    for (const ColorVec& p : pixels) index.add(p);
    return index;
}

/// Index over every pixel of a grid.
inline ColorCubeIndex build_index(const PixelGrid& grid, ColorSpace space, int n) {
    ColorCubeIndex index(space, n);
    for (std::size_t i = 0; i < grid.size(); ++i) index.add(color_of(grid, i, space));
    return index;
}

struct ColorComplexity {
    ColorSpace space = ColorSpace::rgb;
    int n = 1;
    std::uint64_t occupied = 0;
    std::uint64_t total = 0;
    double ratio = 0.0;
};

/// Fraction of the ceil(256/n)^d cubes that hold at least one pixel.
inline ColorComplexity color_complexity(std::uint64_t occupied, ColorSpace space, int n) {
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < dims(space); ++i) total *= cubes_per_axis(n);
    return {space, n, occupied, total, static_cast<double>(occupied) / static_cast<double>(total)};
}

inline ColorComplexity color_complexity(const ColorCubeIndex& index) {
    return color_complexity(index.occupied(), index.space(), index.n());
}

}  // namespace spraydot

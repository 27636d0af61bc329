#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spraydot/error.hpp"

namespace spraydot {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// HSV on the same [0,256) integer scale as RGB: hue degrees are mapped
/// linearly from [0,360) and floored, saturation from [0,1] onto [0,255].
struct Hsv {
    std::uint8_t h = 0, s = 0, v = 0;
    friend bool operator==(const Hsv&, const Hsv&) = default;
};

/// Hexcone conversion with exact integer arithmetic, so re-deriving HSV from
/// RGB is bit-reproducible. Grays give H = S = 0.
constexpr Hsv rgb_to_hsv(Rgb c) noexcept {
    const int r = c.r, g = c.g, b = c.b;
    const int mx = r > g ? (r > b ? r : b) : (g > b ? g : b);
    const int mn = r < g ? (r < b ? r : b) : (g < b ? g : b);
    const int delta = mx - mn;
    if (delta == 0) return Hsv{0, 0, static_cast<std::uint8_t>(mx)};

    // hue_degrees = 60 * (sector + num / delta); scaled hue = floor(deg * 256 / 360)
    int sector = 0;
    int num = 0;
    if (mx == r) {
        num = g - b;
        sector = num < 0 ? 6 : 0;
    } else if (mx == g) {
        num = b - r;
        sector = 2;
    } else {
        num = r - g;
        sector = 4;
    }
    const long long deg_times_delta = 60LL * (static_cast<long long>(sector) * delta + num);
    const long long h = deg_times_delta * 256 / (360LL * delta);
    const int s = 255 * delta / mx;
    return Hsv{static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(s),
               static_cast<std::uint8_t>(mx)};
}

/// Axis-aligned pixel rectangle, half-open: [x, x+width) x [y, y+height).
struct Rect {
    int x = 0, y = 0, width = 0, height = 0;

    [[nodiscard]] int right() const noexcept { return x + width; }
    [[nodiscard]] int bottom() const noexcept { return y + height; }
    [[nodiscard]] bool empty() const noexcept { return width <= 0 || height <= 0; }
    [[nodiscard]] bool contains(const Rect& o) const noexcept {
        return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
    }
    [[nodiscard]] bool contains(int px, int py) const noexcept {
        return px >= x && py >= y && px < right() && py < bottom();
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Test-paper rectangle and the focal area inside it, both in source-image
/// coordinates. The focal area is split into `rows` bands of `squares_per_row`
/// squares each.
struct RegionSpec {
    Rect paper_rect;
    Rect focal_rect;
    int rows = 39;
    int squares_per_row = 10;

    void validate() const {
        if (paper_rect.empty()) throw GeometryError("paper_rect is empty");
        if (focal_rect.empty()) throw GeometryError("focal_rect is empty");
        if (!paper_rect.contains(focal_rect))
            throw GeometryError("focal_rect must lie inside paper_rect");
        if (rows < 1) throw GeometryError("rows must be >= 1");
        if (squares_per_row < 1) throw GeometryError("squares_per_row must be >= 1");
    }
};

/// Decoded, cropped image with both color coordinates per pixel. Immutable
/// once built; HSV is always derived from RGB.
class PixelGrid {
public:
    PixelGrid() = default;

    PixelGrid(int width, int height, std::vector<Rgb> rgb, std::pair<int, int> crop_origin = {0, 0})
        : width_(width), height_(height), origin_(crop_origin), rgb_(std::move(rgb)) {
        if (width <= 0 || height <= 0) throw GeometryError("pixel grid must be non-empty");
        if (rgb_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw GeometryError("pixel buffer size does not match dimensions");
        hsv_.reserve(rgb_.size());
        for (const auto& c : rgb_) hsv_.push_back(rgb_to_hsv(c));
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t size() const noexcept { return rgb_.size(); }
    [[nodiscard]] std::pair<int, int> crop_origin() const noexcept { return origin_; }

    [[nodiscard]] std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }
    [[nodiscard]] const Rgb& rgb(int x, int y) const noexcept { return rgb_[index(x, y)]; }
    [[nodiscard]] const Hsv& hsv(int x, int y) const noexcept { return hsv_[index(x, y)]; }
    [[nodiscard]] const std::vector<Rgb>& rgb() const noexcept { return rgb_; }
    [[nodiscard]] const std::vector<Hsv>& hsv() const noexcept { return hsv_; }

    /// Rectangle covered by this grid, in source-image coordinates.
    [[nodiscard]] Rect bounds() const noexcept { return {origin_.first, origin_.second, width_, height_}; }

    /// Translates a source-image rectangle into grid-local coordinates.
    [[nodiscard]] Rect to_local(const Rect& r) const noexcept {
        return {r.x - origin_.first, r.y - origin_.second, r.width, r.height};
    }

    /// Sub-rectangle copy (grid-local coordinates).
    [[nodiscard]] PixelGrid crop(const Rect& local) const {
        if (local.empty() || !Rect{0, 0, width_, height_}.contains(local))
            throw GeometryError("crop rectangle out of bounds");
        std::vector<Rgb> out;
        out.reserve(static_cast<std::size_t>(local.width) * static_cast<std::size_t>(local.height));
        for (int y = local.y; y < local.bottom(); ++y)
            for (int x = local.x; x < local.right(); ++x) out.push_back(rgb(x, y));
        return PixelGrid(local.width, local.height, std::move(out),
                         {origin_.first + local.x, origin_.second + local.y});
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::pair<int, int> origin_{0, 0};
    std::vector<Rgb> rgb_;
    std::vector<Hsv> hsv_;
};

}  // namespace spraydot

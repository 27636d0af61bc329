#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spraydot/classify.hpp"
#include "spraydot/error.hpp"
#include "spraydot/parallel.hpp"
#include "spraydot/random.hpp"

namespace spraydot {

struct Point2i {
    int x = 0, y = 0;
    friend bool operator==(const Point2i&, const Point2i&) = default;
    friend auto operator<=>(const Point2i& a, const Point2i& b) {
        if (a.y != b.y) return a.y <=> b.y;
        return a.x <=> b.x;
    }
};

struct Point2d {
    double x = 0.0, y = 0.0;
};

struct Circle {
    Point2d center;
    double radius = 0.0;
};

namespace detail {

inline double dist(const Point2d& a, const Point2d& b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

inline Circle circle_from_2(const Point2d& a, const Point2d& b) noexcept {
    const Point2d c{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
    return {c, dist(a, b) / 2.0};
}

/// Circumcircle; a (near-)collinear triple falls back to the widest pair.
inline Circle circle_from_3(const Point2d& a, const Point2d& b, const Point2d& c) noexcept {
    const double bx = b.x - a.x, by = b.y - a.y;
    const double cx = c.x - a.x, cy = c.y - a.y;
    const double det = 2.0 * (bx * cy - by * cx);
    const double scale = std::max({std::abs(bx), std::abs(by), std::abs(cx), std::abs(cy), 1.0});
    if (std::abs(det) <= 1e-12 * scale * scale) {
        Circle best = circle_from_2(a, b);
        for (const Circle& cand : {circle_from_2(a, c), circle_from_2(b, c)})
            if (cand.radius > best.radius) best = cand;
        return best;
    }
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    const Point2d center{a.x + (cy * b2 - by * c2) / det, a.y + (bx * c2 - cx * b2) / det};
    return {center, std::max({dist(center, a), dist(center, b), dist(center, c)})};
}

inline bool covers(const Circle& c, const Point2d& p) noexcept {
    return dist(c.center, p) <= c.radius + 1e-10 * (1.0 + c.radius);
}

}  // namespace detail

/// Smallest circle containing every point (randomized incremental algorithm,
/// expected linear time). Points are put in canonical order and shuffled with
/// a fixed seed, so the answer does not depend on the input order.
inline Circle min_enclosing_circle(std::vector<Point2d> points) {
    if (points.empty()) throw DataError("enclosing circle of an empty point set");
    std::sort(points.begin(), points.end(),
              [](const Point2d& a, const Point2d& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const Point2d& a, const Point2d& b) { return a.x == b.x && a.y == b.y; }),
                 points.end());
    // Work relative to the first point to keep magnitudes small.
    const Point2d origin = points.front();
    for (auto& p : points) p = {p.x - origin.x, p.y - origin.y};
    Rng rng(0x5eedc1c1eULL);
    for (std::size_t i = points.size(); i > 1; --i)
        std::swap(points[i - 1], points[static_cast<std::size_t>(rng.below(i))]);

    using detail::covers;
    Circle c{points[0], 0.0};
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (covers(c, points[i])) continue;
        c = {points[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (covers(c, points[j])) continue;
            c = detail::circle_from_2(points[i], points[j]);
            for (std::size_t k = 0; k < j; ++k)
                if (!covers(c, points[k])) c = detail::circle_from_3(points[i], points[j], points[k]);
        }
    }
    c.center = {c.center.x + origin.x, c.center.y + origin.y};
    return c;
}

enum class SizeCategory : std::uint8_t { small, medium, large };

inline std::string_view to_string(SizeCategory c) noexcept {
    switch (c) {
        case SizeCategory::small: return "small";
        case SizeCategory::medium: return "medium";
        case SizeCategory::large: return "large";
    }
    return "small";
}

inline SizeCategory parse_size_category(std::string_view s) {
    if (s == "small") return SizeCategory::small;
    if (s == "medium") return SizeCategory::medium;
    if (s == "large") return SizeCategory::large;
    throw ValidationError("unknown size category '" + std::string(s) + "'");
}

/// A connected purple component.
struct Dot {
    std::vector<Point2i> pixels;  // raster order
    std::size_t pixel_count = 0;
    double radius = 0.0;
    Point2d circle_center;
    Point2d centroid;
    SizeCategory category = SizeCategory::small;
};

enum class Connectivity { four = 4, eight = 8 };

/// Connected components of the purple pixels, ordered by (min y, min x).
/// Pixels are treated as lattice points: a single pixel has radius 0.
inline std::vector<Dot> extract_dots(const LabelMask& mask, Connectivity conn = Connectivity::eight) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::vector<Dot> dots;
    std::vector<Point2i> queue;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto start = mask.index(x, y);
            if (seen[start] || !mask.purple(start)) continue;
            Dot dot;
            queue.clear();
            queue.push_back({x, y});
            seen[start] = 1;
            for (std::size_t head = 0; head < queue.size(); ++head) {
                const Point2i p = queue[head];
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        if (conn == Connectivity::four && dx != 0 && dy != 0) continue;
                        const int nx = p.x + dx, ny = p.y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const auto ni = mask.index(nx, ny);
                        if (seen[ni] || !mask.purple(ni)) continue;
                        seen[ni] = 1;
                        queue.push_back({nx, ny});
                    }
            }
            dot.pixels = queue;
            std::sort(dot.pixels.begin(), dot.pixels.end());
            dot.pixel_count = dot.pixels.size();
            dots.push_back(std::move(dot));
        }
    }
    parallel_for(dots.size(), [&](std::size_t i) {
        Dot& dot = dots[i];
        std::vector<Point2d> pts;
        pts.reserve(dot.pixels.size());
        double sx = 0.0, sy = 0.0;
        for (const auto& p : dot.pixels) {
            pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
            sx += p.x;
            sy += p.y;
        }
        const Circle c = min_enclosing_circle(std::move(pts));
        dot.radius = c.radius;
        dot.circle_center = c.center;
        dot.centroid = {sx / static_cast<double>(dot.pixel_count), sy / static_cast<double>(dot.pixel_count)};
    });
    return dots;
}

enum class ThresholdProvenance { configured, quantile_derived };

/// small < t1 <= medium < t2 <= large, by pixel count.
struct SizeThresholds {
    std::size_t t1 = 20;
    std::size_t t2 = 200;
    ThresholdProvenance provenance = ThresholdProvenance::configured;

    void validate() const {
        if (t1 < 1 || t1 >= t2) throw ValidationError("size thresholds need 1 <= t1 < t2");
    }
};

/// Nearest-rank percentile of an ascending sample.
inline std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double percent) {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

struct ThresholdChoice {
    SizeThresholds thresholds;
    std::optional<std::string> warning;
};

/// Per-image thresholds from the 75th / 95th nearest-rank percentiles of the
/// pixel counts, floored at 2 and forced strictly increasing. Falls back to
/// `fallback` when the counts carry no spread.
inline ThresholdChoice quantile_thresholds(std::vector<std::size_t> counts, const SizeThresholds& fallback) {
    if (counts.empty()) return {fallback, "no dots: using configured size thresholds"};
    std::sort(counts.begin(), counts.end());
    if (counts.front() == counts.back())
        return {fallback, "all dots have the same size: using configured size thresholds"};
    SizeThresholds t;
    t.provenance = ThresholdProvenance::quantile_derived;
    t.t1 = std::max<std::size_t>(2, nearest_rank(counts, 75.0));
    t.t2 = std::max<std::size_t>(2, nearest_rank(counts, 95.0));
    if (t.t2 <= t.t1) t.t2 = t.t1 + 1;
    return {t, std::nullopt};
}

inline SizeCategory category_of(std::size_t pixel_count, const SizeThresholds& t) noexcept {
    if (pixel_count < t.t1) return SizeCategory::small;
    if (pixel_count < t.t2) return SizeCategory::medium;
    return SizeCategory::large;
}

inline void categorize(std::vector<Dot>& dots, const SizeThresholds& t) {
    t.validate();
    for (auto& d : dots) d.category = category_of(d.pixel_count, t);
}

}  // namespace spraydot

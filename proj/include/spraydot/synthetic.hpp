#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spraydot/color.hpp"
#include "spraydot/image_io.hpp"
#include "spraydot/random.hpp"

namespace spraydot::synthetic {

/// Spray-paper look-alike: purple ellipses on yellow paper under a linear
/// left-to-right brightness ramp, optionally framed by a dark background.
struct SprayPaperSpec {
    int paper_width = 2000;
    int paper_height = 1000;
    int border = 0;  // background frame around the paper
    std::size_t dots = 300;
    double min_area = 3.0;
    double max_area = 3000.0;
    double max_aspect = 2.0;
    double gradient = 0.30;  // brightness factor spans 1 -/+ gradient
    Rgb yellow{235, 205, 60};
    Rgb purple{140, 60, 160};
    Rgb background{60, 60, 64};
    int yellow_noise = 6;  // uniform +/- per channel
    int purple_noise = 3;
    int min_gap = 3;  // pixels kept free between neighbouring dots
    std::uint64_t seed = 1;
};

struct Ellipse {
    int cx = 0, cy = 0;  // paper coordinates
    double a = 1.0, b = 1.0, angle = 0.0;
};

struct SprayPaper {
    RasterImage image;
    Rect paper;                  // inside image
    std::vector<std::int32_t> truth;  // per paper pixel: dot index or -1
    std::vector<Ellipse> ellipses;

    [[nodiscard]] std::size_t true_purple_pixels() const {
        return static_cast<std::size_t>(std::count_if(truth.begin(), truth.end(), [](auto t) { return t >= 0; }));
    }
};

inline bool inside(const Ellipse& e, int x, int y) noexcept {
    const double dx = x - e.cx, dy = y - e.cy;
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double u = (dx * c + dy * s) / e.a;
    const double v = (-dx * s + dy * c) / e.b;
    return u * u + v * v <= 1.0;
}

inline std::uint8_t shade(int base, double factor, int noise) noexcept {
    const long v = std::lround(base * factor) + noise;
    return static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
}

inline SprayPaper render(const SprayPaperSpec& spec) {
    Rng rng(spec.seed);
    SprayPaper out;
    const int w = spec.paper_width, h = spec.paper_height;
    out.paper = {spec.border, spec.border, w, h};

    // Non-overlapping placement, largest ellipses first so they always fit.
    std::vector<double> areas(spec.dots);
    const double log_lo = std::log(spec.min_area), log_hi = std::log(spec.max_area);
    for (auto& a : areas) a = std::exp(log_lo + (log_hi - log_lo) * rng.uniform01());
    std::sort(areas.begin(), areas.end(), std::greater<>());
    constexpr double pi = 3.14159265358979323846;
    for (const double area : areas) {
        const double aspect = 1.0 + (spec.max_aspect - 1.0) * rng.uniform01();
        Ellipse e;
        e.a = std::sqrt(area * aspect / pi);
        e.b = std::sqrt(area / (aspect * pi));
        e.angle = pi * rng.uniform01();
        const int reach = static_cast<int>(std::ceil(e.a)) + 1;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            e.cx = reach + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, w - 2 * reach))));
            e.cy = reach + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, h - 2 * reach))));
            const bool clear = std::none_of(out.ellipses.begin(), out.ellipses.end(), [&](const Ellipse& o) {
                const double gap = std::hypot(e.cx - o.cx, e.cy - o.cy) - e.a - o.a;
                return gap < spec.min_gap + 2.0;
            });
            if (clear) {
                out.ellipses.push_back(e);
                break;
            }
        }
    }

    out.truth.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -1);
    for (std::size_t id = 0; id < out.ellipses.size(); ++id) {
        const Ellipse& e = out.ellipses[id];
        const int reach = static_cast<int>(std::ceil(e.a)) + 1;
        for (int y = std::max(0, e.cy - reach); y <= std::min(h - 1, e.cy + reach); ++y)
            for (int x = std::max(0, e.cx - reach); x <= std::min(w - 1, e.cx + reach); ++x)
                if (inside(e, x, y)) out.truth[static_cast<std::size_t>(y) * w + x] = static_cast<std::int32_t>(id);
    }

    const int iw = w + 2 * spec.border, ih = h + 2 * spec.border;
    out.image.width = iw;
    out.image.height = ih;
    out.image.pixels.assign(static_cast<std::size_t>(iw) * static_cast<std::size_t>(ih), spec.background);
    auto noise = [&](int amp) { return amp == 0 ? 0 : static_cast<int>(rng.below(2 * amp + 1)) - amp; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double factor = 1.0 + spec.gradient * (2.0 * x / std::max(1, w - 1) - 1.0);
            const bool purple = out.truth[static_cast<std::size_t>(y) * w + x] >= 0;
            const Rgb base = purple ? spec.purple : spec.yellow;
            const int amp = purple ? spec.purple_noise : spec.yellow_noise;
            const int n0 = noise(amp), n1 = noise(amp), n2 = noise(amp);
            out.image.pixels[static_cast<std::size_t>(y + spec.border) * iw + (x + spec.border)] =
                Rgb{shade(base.r, factor, n0), shade(base.g, factor, n1), shade(base.b, factor, n2)};
        }
    }
    return out;
}

}  // namespace spraydot::synthetic

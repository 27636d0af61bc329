#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "spraydot/error.hpp"

namespace spraydot::svg {

inline std::string escape(std::string_view s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Append-only SVG document. Coordinates are printed with two decimals so the
/// output is byte-stable.
class Document {
public:
    Document(double width, double height) : width_(width), height_(height) {}

    void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke = "none",
              double stroke_width = 1.0) {
        body_ += fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="{}" stroke="{}" stroke-width="{:.2f}"/>)",
                             x, y, w, h, fill, stroke, stroke_width);
        body_ += '\n';
    }

    void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
              std::string_view dash = "") {
        body_ += fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="{}" stroke-width="{:.2f}")",
                             x1, y1, x2, y2, stroke, width);
        if (!dash.empty()) body_ += fmt::format(R"( stroke-dasharray="{}")", dash);
        body_ += "/>\n";
    }

    void circle(double cx, double cy, double r, std::string_view fill, std::string_view stroke = "none") {
        body_ += fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="{:.2f}" fill="{}" stroke="{}"/>)", cx, cy, r, fill,
                             stroke);
        body_ += '\n';
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width = 1.5,
                  std::string_view dash = "") {
        if (pts.empty()) return;
        body_ += R"(<polyline fill="none" points=")";
        for (std::size_t i = 0; i < pts.size(); ++i)
            body_ += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", pts[i].first, pts[i].second);
        body_ += fmt::format(R"(" stroke="{}" stroke-width="{:.2f}")", stroke, width);
        if (!dash.empty()) body_ += fmt::format(R"( stroke-dasharray="{}")", dash);
        body_ += "/>\n";
    }

    void text(double x, double y, std::string_view s, double size = 12.0, std::string_view anchor = "start",
              std::string_view fill = "#222") {
        body_ += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-family="sans-serif" font-size="{:.1f}" text-anchor="{}" fill="{}">{}</text>)",
                             x, y, size, anchor, fill, escape(s));
        body_ += '\n';
    }

    [[nodiscard]] std::string str() const {
        return fmt::format(
                   R"(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" viewBox="0 0 {:.0f} {:.0f}">)",
                   width_, height_, width_, height_) +
               "\n" + fmt::format(R"(<rect width="100%" height="100%" fill="white"/>)") + "\n" + body_ + "</svg>\n";
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write '" + path + "'");
        out << str();
    }

private:
    double width_;
    double height_;
    std::string body_;
};

/// Linear data-to-pixel mapping for a rectangular plot area with axes.
class Frame {
public:
    Frame(Document& doc, double left, double top, double width, double height, double x0, double x1, double y0,
          double y1)
        : doc_(doc), left_(left), top_(top), width_(width), height_(height), x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1),
          y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1) {}

    [[nodiscard]] double px(double x) const { return left_ + (x - x0_) / (x1_ - x0_) * width_; }
    [[nodiscard]] double py(double y) const { return top_ + height_ - (y - y0_) / (y1_ - y0_) * height_; }

    void axes(std::string_view xlabel, std::string_view ylabel, int ticks = 5) {
        doc_.line(left_, top_ + height_, left_ + width_, top_ + height_, "#333");
        doc_.line(left_, top_, left_, top_ + height_, "#333");
        for (int i = 0; i <= ticks; ++i) {
            const double fx = x0_ + (x1_ - x0_) * i / ticks;
            const double fy = y0_ + (y1_ - y0_) * i / ticks;
            doc_.line(px(fx), top_ + height_, px(fx), top_ + height_ + 4, "#333");
            doc_.text(px(fx), top_ + height_ + 16, fmt::format("{:.3g}", fx), 10, "middle");
            doc_.line(left_ - 4, py(fy), left_, py(fy), "#333");
            doc_.text(left_ - 6, py(fy) + 3, fmt::format("{:.3g}", fy), 10, "end");
        }
        doc_.text(left_ + width_ / 2, top_ + height_ + 34, xlabel, 12, "middle");
        doc_.text(left_ - 40, top_ - 8, ylabel, 12, "start");
    }

    void bar(double xa, double xb, double y, std::string_view fill) {
        const double top = py(std::max(y, y0_));
        doc_.rect(px(xa), top, px(xb) - px(xa), py(y0_) - top, fill, "#555", 0.5);
    }

    [[nodiscard]] Document& doc() { return doc_; }

private:
    Document& doc_;
    double left_, top_, width_, height_;
    double x0_, x1_, y0_, y1_;
};

}  // namespace spraydot::svg

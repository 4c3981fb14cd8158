#pragma once

// Minimal SVG emission for the benchmark figures: a reward heatmap with data
// points and sample crosses, and gradient-field quiver plots. Output is a
// pure function of the inputs (fixed-precision formatting, no timestamps).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "coms/data.hpp"
#include "coms/eval.hpp"
#include "coms/nnet.hpp"
#include "coms/vec2.hpp"

namespace coms::svg {

struct Frame {
    double low = -1.5;
    double high = 2.0;
    double size_px = 600.0;
    double margin_px = 40.0;
    std::string title;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Linear ramp between a dark purple and a yellow, t in [0, 1].
inline std::string ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(68, 253), mix(1, 231), mix(84, 37));
    return buf;
}

class Canvas {
public:
    explicit Canvas(const Frame& frame) : f_(frame) {
        const double total = f_.size_px + 2 * f_.margin_px;
        out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(total) + "\" height=\"" + num(total) +
                "\" viewBox=\"0 0 " + num(total) + " " + num(total) + "\">\n";
        out_ += "<defs><clipPath id=\"plot\"><rect x=\"" + num(f_.margin_px) + "\" y=\"" + num(f_.margin_px) +
                "\" width=\"" + num(f_.size_px) + "\" height=\"" + num(f_.size_px) + "\"/></clipPath></defs>\n";
        out_ += "<rect x=\"0\" y=\"0\" width=\"" + num(total) + "\" height=\"" + num(total) + "\" fill=\"white\"/>\n";
        if (!f_.title.empty())
            out_ += "<text x=\"" + num(total / 2) + "\" y=\"" + num(f_.margin_px * 0.6) +
                    "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + escape(f_.title) +
                    "</text>\n";
        out_ += "<g clip-path=\"url(#plot)\">\n";
    }

    double px(double x) const { return f_.margin_px + (x - f_.low) / (f_.high - f_.low) * f_.size_px; }
    double py(double y) const { return f_.margin_px + (f_.high - y) / (f_.high - f_.low) * f_.size_px; }
    double scale() const { return f_.size_px / (f_.high - f_.low); }

    void raw(const std::string& s) { out_ += s; }

    std::string finish() {
        out_ += "</g>\n";
        const double m = f_.margin_px;
        const double s = f_.size_px;
        out_ += "<rect x=\"" + num(m) + "\" y=\"" + num(m) + "\" width=\"" + num(s) + "\" height=\"" + num(s) +
                "\" fill=\"none\" stroke=\"black\"/>\n";
        const auto label = [&](double v, double x, double y, const char* anchor) {
            out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
                    "\" font-family=\"sans-serif\" font-size=\"11\">" + num(v) + "</text>\n";
        };
        label(f_.low, px(f_.low), m + s + 16, "middle");
        label(f_.high, px(f_.high), m + s + 16, "middle");
        label(f_.low, m - 4, py(f_.low) + 4, "end");
        label(f_.high, m - 4, py(f_.high) + 4, "end");
        out_ += "</svg>\n";
        return std::move(out_);
    }

private:
    Frame f_;
    std::string out_;
};

}  // namespace detail

/// Ground-truth reward heatmap on a `grid` x `grid` raster.
inline void reward_heatmap(detail::Canvas& c, const Frame& frame, std::size_t grid) {
    const auto centers = cell_centers(frame.low, frame.high, grid);
    double lo = ground_truth_reward(centers.front());
    double hi = lo;
    for (const auto& p : centers) {
        lo = std::min(lo, ground_truth_reward(p));
        hi = std::max(hi, ground_truth_reward(p));
    }
    const double cell = (frame.high - frame.low) / static_cast<double>(grid);
    const double w = cell * c.scale();
    c.raw("<g class=\"heatmap\" shape-rendering=\"crispEdges\">\n");
    for (const auto& p : centers) {
        const double t = hi > lo ? (ground_truth_reward(p) - lo) / (hi - lo) : 0.0;
        c.raw("<rect x=\"" + detail::num(c.px(p.x - cell / 2)) + "\" y=\"" + detail::num(c.py(p.y + cell / 2)) +
              "\" width=\"" + detail::num(w + 0.05) + "\" height=\"" + detail::num(w + 0.05) + "\" fill=\"" +
              detail::ramp(t) + "\"/>\n");
    }
    c.raw("</g>\n");
}

inline void data_points(detail::Canvas& c, std::span<const Vec2> data) {
    for (const auto& p : data)
        c.raw("<circle class=\"data\" cx=\"" + detail::num(c.px(p.x)) + "\" cy=\"" + detail::num(c.py(p.y)) +
              "\" r=\"2.5\" fill=\"#ff8c00\" fill-opacity=\"0.8\"/>\n");
}

inline void sample_crosses(detail::Canvas& c, std::span<const Vec2> samples) {
    constexpr double arm = 4.0;
    for (const auto& p : samples) {
        const double x = c.px(p.x);
        const double y = c.py(p.y);
        c.raw("<path class=\"sample\" d=\"M" + detail::num(x - arm) + " " + detail::num(y - arm) + "L" +
              detail::num(x + arm) + " " + detail::num(y + arm) + "M" + detail::num(x - arm) + " " +
              detail::num(y + arm) + "L" + detail::num(x + arm) + " " + detail::num(y - arm) +
              "\" stroke=\"black\" stroke-width=\"1.5\" fill=\"none\"/>\n");
    }
}

/// Data (orange dots) and samples (black crosses) over the reward heatmap.
inline std::string scatter(std::span<const Vec2> data, std::span<const Vec2> samples, const Frame& frame = {},
                           std::size_t heatmap_grid = 100) {
    detail::Canvas c(frame);
    reward_heatmap(c, frame, heatmap_grid);
    data_points(c, data);
    sample_crosses(c, samples);
    return c.finish();
}

/// Data points filled by their label on the shared color ramp, over the
/// reward heatmap. Labels are scaled by the heatmap's reward range.
inline std::string labeled_scatter(std::span<const LabeledPoint> data, const Frame& frame = {},
                                   std::size_t heatmap_grid = 100) {
    detail::Canvas c(frame);
    reward_heatmap(c, frame, heatmap_grid);
    const auto centers = cell_centers(frame.low, frame.high, heatmap_grid);
    double lo = ground_truth_reward(centers.front());
    double hi = lo;
    for (const auto& p : centers) {
        lo = std::min(lo, ground_truth_reward(p));
        hi = std::max(hi, ground_truth_reward(p));
    }
    for (const auto& p : data) {
        const double t = hi > lo ? (p.y - lo) / (hi - lo) : 0.0;
        c.raw("<circle class=\"data\" cx=\"" + detail::num(c.px(p.x.x)) + "\" cy=\"" + detail::num(c.py(p.x.y)) +
              "\" r=\"3\" fill=\"" + detail::ramp(t) + "\" stroke=\"black\" stroke-width=\"0.5\"/>\n");
    }
    return c.finish();
}

struct Arrow {
    Vec2 origin;
    Vec2 gradient;
};

template <ScalarField Field>
std::vector<Arrow> quiver_arrows(const Field& field, const Frame& frame = {}, std::size_t grid = 25) {
    std::vector<Arrow> out;
    for (const auto& p : cell_centers(frame.low, frame.high, grid)) out.push_back({p, field.gradient(p)});
    return out;
}

/// Gradient arrows on a `grid` x `grid` lattice of cell centers. Lengths are
/// scaled so the longest arrow spans 90% of a cell; zero gradients are dots.
template <ScalarField Field>
std::string quiver(const Field& field, std::span<const Vec2> data = {}, const Frame& frame = {},
                   std::size_t grid = 25) {
    const auto arrows = quiver_arrows(field, frame, grid);
    double longest = 0.0;
    for (const auto& a : arrows) longest = std::max(longest, norm(a.gradient));
    const double cell_px = (frame.high - frame.low) / static_cast<double>(grid) * (frame.size_px / (frame.high - frame.low));

    detail::Canvas c(frame);
    data_points(c, data);
    for (const auto& a : arrows) {
        const double x0 = c.px(a.origin.x);
        const double y0 = c.py(a.origin.y);
        const double len = longest > 0.0 ? 0.9 * cell_px * norm(a.gradient) / longest : 0.0;
        if (len < 0.5) {
            c.raw("<circle class=\"dot\" cx=\"" + detail::num(x0) + "\" cy=\"" + detail::num(y0) +
                  "\" r=\"1\" fill=\"black\"/>\n");
            continue;
        }
        const double n = norm(a.gradient);
        const double ux = a.gradient.x / n;
        const double uy = -a.gradient.y / n;  // screen y points down
        const double x1 = x0 + len * ux;
        const double y1 = y0 + len * uy;
        const double head = std::min(4.0, 0.35 * len);
        const double hx = x1 - head * ux;
        const double hy = y1 - head * uy;
        c.raw("<path class=\"arrow\" d=\"M" + detail::num(x0) + " " + detail::num(y0) + "L" + detail::num(x1) + " " +
              detail::num(y1) + "M" + detail::num(hx - 0.5 * head * uy) + " " + detail::num(hy + 0.5 * head * ux) +
              "L" + detail::num(x1) + " " + detail::num(y1) + "L" + detail::num(hx + 0.5 * head * uy) + " " +
              detail::num(hy - 0.5 * head * ux) + "\" stroke=\"black\" stroke-width=\"1\" fill=\"none\"/>\n");
    }
    return c.finish();
}

}  // namespace coms::svg

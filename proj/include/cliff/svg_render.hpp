// Static SVG rendering: per-cell dominant-mode arrows colored by motion
// ratio (blue = static, red = fully dynamic), with optional trajectory
// overlays (red ground truth, green observed, blue predictions). Output is
// deterministic: fixed number formatting, cells in grid order.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cliff/map.hpp"

namespace cliff {

using PointList = std::vector<std::pair<double, double>>;

struct SvgScene {
    const CliffMap* map = nullptr;
    std::vector<PointList> ground_truth;  // red
    std::vector<PointList> observed;      // green
    std::vector<PointList> predictions;   // blue
};

struct RenderOptions {
    double pixels_per_meter = 40.0;
    double margin_m = 1.0;
};

inline constexpr std::size_t max_renderable_cells = 1000000;

namespace detail {

struct SvgFrame {
    double x_min, y_max, scale;

    double px(double x) const { return (x - x_min) * scale; }
    double py(double y) const { return (y_max - y) * scale; }
};

inline std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline void render_polyline(std::ostream& out, const PointList& points,
                            const SvgFrame& f, const char* css_class,
                            const char* color) {
    if (points.empty()) return;
    out << "  <polyline class=\"" << css_class << "\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) out << " ";
        out << fmt(f.px(points[i].first)) << "," << fmt(f.py(points[i].second));
    }
    out << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
}

}  // namespace detail

inline void render_svg(std::ostream& out, const SvgScene& scene,
                       const RenderOptions& opts = {}) {
    if (scene.map && scene.map->size() > max_renderable_cells) {
        throw std::runtime_error(
            "map too large to render (" + std::to_string(scene.map->size()) +
            " cells > " + std::to_string(max_renderable_cells) +
            "); crop the map or raise the resolution");
    }
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    bool have_extent = false;
    auto grow = [&](double x, double y) {
        if (!have_extent) {
            x_min = x_max = x;
            y_min = y_max = y;
            have_extent = true;
            return;
        }
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
    };
    if (scene.map && !scene.map->empty()) {
        const MapBounds b = scene.map->bounds();
        grow(b.x_min, b.y_min);
        grow(b.x_max, b.y_max);
    }
    for (const auto* group : {&scene.ground_truth, &scene.observed,
                              &scene.predictions}) {
        for (const auto& line : *group) {
            for (const auto& [x, y] : line) grow(x, y);
        }
    }
    if (!have_extent) {
        throw std::invalid_argument("render_svg: nothing to render");
    }
    x_min -= opts.margin_m;
    x_max += opts.margin_m;
    y_min -= opts.margin_m;
    y_max += opts.margin_m;

    const detail::SvgFrame f{x_min, y_max, opts.pixels_per_meter};
    const double width = (x_max - x_min) * opts.pixels_per_meter;
    const double height = (y_max - y_min) * opts.pixels_per_meter;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
        << detail::fmt(width) << "\" height=\"" << detail::fmt(height)
        << "\" viewBox=\"0 0 " << detail::fmt(width) << " "
        << detail::fmt(height) << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    if (scene.map) {
        const double res = scene.map->resolution();
        // Arrow length scales with the dominant mean speed, capped at the
        // cell size so arrows stay inside their cells.
        double rho_max = 0.0;
        for (const CellIndex& idx : scene.map->sorted_indices()) {
            rho_max = std::max(rho_max,
                               scene.map->find(idx)->mixture.dominant().swnd.mu.rho);
        }
        for (const CellIndex& idx : scene.map->sorted_indices()) {
            const CliffCell* cell = scene.map->find(idx);
            const auto& mode = cell->mixture.dominant().swnd.mu;
            const double len =
                rho_max > 0.0 ? 0.45 * res * (mode.rho / rho_max) : 0.0;
            const double cx = f.px(cell->x);
            const double cy = f.py(cell->y);
            const double tx = f.px(cell->x + len * std::cos(mode.theta));
            const double ty = f.py(cell->y + len * std::sin(mode.theta));
            const double head = 0.3 * len * opts.pixels_per_meter;
            const double back = mode.theta;  // map frame; screen y is flipped
            const double wx1 = tx - head * std::cos(back - 0.5);
            const double wy1 = ty + head * std::sin(back - 0.5);
            const double wx2 = tx - head * std::cos(back + 0.5);
            const double wy2 = ty + head * std::sin(back + 0.5);
            const int red = static_cast<int>(std::lround(255.0 * cell->motion_ratio));
            char color[24];
            std::snprintf(color, sizeof(color), "rgb(%d,0,%d)", red, 255 - red);
            out << "  <path class=\"arrow\" data-theta=\""
                << detail::fmt(mode.theta) << "\" data-rho=\""
                << detail::fmt(mode.rho) << "\" data-ratio=\""
                << detail::fmt(cell->motion_ratio) << "\" d=\"M "
                << detail::fmt(cx) << " " << detail::fmt(cy) << " L "
                << detail::fmt(tx) << " " << detail::fmt(ty) << " M "
                << detail::fmt(wx1) << " " << detail::fmt(wy1) << " L "
                << detail::fmt(tx) << " " << detail::fmt(ty) << " L "
                << detail::fmt(wx2) << " " << detail::fmt(wy2)
                << "\" fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\"/>\n";
        }
    }

    for (const auto& line : scene.predictions) {
        detail::render_polyline(out, line, f, "prediction", "blue");
    }
    for (const auto& line : scene.observed) {
        detail::render_polyline(out, line, f, "observed", "green");
    }
    for (const auto& line : scene.ground_truth) {
        detail::render_polyline(out, line, f, "ground-truth", "red");
    }
    out << "</svg>\n";
}

}  // namespace cliff

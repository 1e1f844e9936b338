// SPDX-License-Identifier: Apache-2.0
#include "subgeo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "subgeo/errors.hpp"

namespace subgeo::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 55.0;
constexpr int kTicks = 5;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double to_px(double v, double px_lo, double px_hi) const {
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

// Data range plus 5% margin on each side; degenerate ranges get a unit pad.
Axis padded_axis(double lo, double hi) {
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1.0, std::abs(lo));
    return Axis{lo - 0.05 * span, hi + 0.05 * span};
}

} // namespace

std::string scatter_svg(const std::vector<std::pair<double, double>>& points,
                        const std::optional<FittedLine>& fit, const ScatterLabels& labels) {
    if (points.empty()) throw DimError("scatter_svg: need at least one point");

    double xlo = points[0].first, xhi = xlo, ylo = points[0].second, yhi = ylo;
    for (const auto& [x, y] : points) {
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    const Axis ax = padded_axis(xlo, xhi);
    const Axis ay = padded_axis(ylo, yhi);
    const double px_left = kMarginLeft, px_right = kWidth - kMarginRight;
    const double px_top = kMarginTop, px_bottom = kHeight - kMarginBottom;
    auto xpx = [&](double v) { return ax.to_px(v, px_left, px_right); };
    auto ypx = [&](double v) { return ay.to_px(v, px_bottom, px_top); }; // y grows upward

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
    s += "<title>" + escape(labels.title) + "</title>\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" fill=\"white\"/>\n";

    // frame
    s += "<path d=\"M " + fmt(px_left) + " " + fmt(px_top) + " L " + fmt(px_left) + " " +
         fmt(px_bottom) + " L " + fmt(px_right) + " " + fmt(px_bottom) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // ticks and numeric labels
    for (int i = 0; i < kTicks; ++i) {
        const double fx = ax.lo + (ax.hi - ax.lo) * i / (kTicks - 1);
        const double px = xpx(fx);
        s += "<path d=\"M " + fmt(px) + " " + fmt(px_bottom) + " L " + fmt(px) + " " +
             fmt(px_bottom + 6) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        s += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(px_bottom + 20) +
             "\" font-size=\"12\" text-anchor=\"middle\" data-tick-x=\"" + fmt(fx) + "\">" + fmt(fx) +
             "</text>\n";

        const double fy = ay.lo + (ay.hi - ay.lo) * i / (kTicks - 1);
        const double py = ypx(fy);
        s += "<path d=\"M " + fmt(px_left - 6) + " " + fmt(py) + " L " + fmt(px_left) + " " + fmt(py) +
             "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        s += "<text x=\"" + fmt(px_left - 9) + "\" y=\"" + fmt(py + 4) +
             "\" font-size=\"12\" text-anchor=\"end\" data-tick-y=\"" + fmt(fy) + "\">" + fmt(fy) +
             "</text>\n";
    }

    s += "<text x=\"" + fmt((px_left + px_right) / 2) + "\" y=\"" + fmt(kHeight - 12) +
         "\" font-size=\"14\" text-anchor=\"middle\">" + escape(labels.x_label) + "</text>\n";
    s += "<text x=\"18\" y=\"" + fmt((px_top + px_bottom) / 2) +
         "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fmt((px_top + px_bottom) / 2) + ")\">" + escape(labels.y_label) + "</text>\n";
    s += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">" +
         escape(labels.title) + "</text>\n";

    if (fit) {
        // Clip the fitted segment to the plotted x-range.
        const double x1 = ax.lo, x2 = ax.hi;
        const double y1 = fit->slope * x1 + fit->intercept;
        const double y2 = fit->slope * x2 + fit->intercept;
        s += "<line class=\"fit\" x1=\"" + fmt(xpx(x1)) + "\" y1=\"" + fmt(ypx(y1)) + "\" x2=\"" +
             fmt(xpx(x2)) + "\" y2=\"" + fmt(ypx(y2)) +
             "\" stroke=\"firebrick\" stroke-width=\"1.5\"/>\n";
    }

    for (const auto& [x, y] : points) {
        s += "<circle cx=\"" + fmt(xpx(x)) + "\" cy=\"" + fmt(ypx(y)) +
             "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

void emit_scatter_svg(const std::vector<std::pair<double, double>>& points,
                      const std::optional<FittedLine>& fit, const ScatterLabels& labels,
                      const std::string& path) {
    const std::string body = scatter_svg(points, fit, labels);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

} // namespace subgeo::cli

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace subgeo::cli {

struct ScatterLabels {
    std::string title;
    std::string x_label;
    std::string y_label;
};

struct FittedLine {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Standalone scatter SVG: numeric tick labels spanning the data range with
/// a 5% margin, one <circle> per point, and (when a fit is given) exactly
/// one <line> element for it. Axes and ticks are drawn with <path> so the
/// fit line stays the only <line> in the document. No external resources.
std::string scatter_svg(const std::vector<std::pair<double, double>>& points,
                        const std::optional<FittedLine>& fit, const ScatterLabels& labels);

void emit_scatter_svg(const std::vector<std::pair<double, double>>& points,
                      const std::optional<FittedLine>& fit, const ScatterLabels& labels,
                      const std::string& path);

} // namespace subgeo::cli

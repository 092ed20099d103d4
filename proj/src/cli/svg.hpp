#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mrh::cli {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    bool scatter = false;      // false: polyline, true: dots only
    double marker_radius = 2.0;
};

// Self-contained SVG document: axes with tick labels, legend, optional
// annotation lines in the top-left corner under the title.
std::string plot_svg(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<PlotSeries>& series,
                     const std::vector<std::string>& annotations = {});

}  // namespace mrh::cli

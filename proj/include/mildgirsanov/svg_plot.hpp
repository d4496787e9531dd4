#pragma once

#include <string>
#include <vector>

namespace mg {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers_only = false;
};

/// Minimal line plot: axes with ticks, one polyline per series, legend.
struct LinePlot {
    std::string name;  // file stem
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<PlotSeries> series;
};

std::string render_svg(const LinePlot& plot, int width = 640, int height = 420);

}  // namespace mg

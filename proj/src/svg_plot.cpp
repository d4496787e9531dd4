#include "mildgirsanov/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
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

std::string tick_label(double v, bool log) {
    char buf[32];
    if (log) {
        std::snprintf(buf, sizeof(buf), "%.3g", std::pow(10.0, v));
    } else {
        std::snprintf(buf, sizeof(buf), "%.3g", v);
    }
    return buf;
}

}  // namespace

std::string render_svg(const LinePlot& plot, int width, int height) {
    const double left = 70, right = 20, top = 40, bottom = 55;
    const double pw = width - left - right;
    const double ph = height - top - bottom;

    auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!plot.log_x || x > 0) && (!plot.log_y || y > 0);
    };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : plot.series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto px = [&](double v) { return left + (tx(v) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return top + (1.0 - (ty(v) - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(plot.title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double gx = left + pw * i / 4.0;
        const double gy = top + ph * (1.0 - i / 4.0);
        os << "<line x1=\"" << gx << "\" y1=\"" << top + ph << "\" x2=\"" << gx << "\" y2=\"" << top + ph + 5
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << gx << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
           << tick_label(fx, plot.log_x) << "</text>\n";
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << gy << "\" x2=\"" << left << "\" y2=\"" << gy
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
           << tick_label(fy, plot.log_y) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
       << escape(plot.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << top + ph / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

    for (std::size_t s = 0; s < plot.series.size(); ++s) {
        const auto& series = plot.series[s];
        const char* color = kPalette[s % std::size(kPalette)];
        std::ostringstream pts;
        for (std::size_t i = 0; i < std::min(series.x.size(), series.y.size()); ++i) {
            if (!usable(series.x[i], series.y[i])) continue;
            pts << px(series.x[i]) << ',' << py(series.y[i]) << ' ';
            if (series.markers_only) {
                os << "<circle cx=\"" << px(series.x[i]) << "\" cy=\"" << py(series.y[i])
                   << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
        }
        if (!series.markers_only) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
               << pts.str() << "\"/>\n";
        }
        const double ly = top + 14 + 16 * static_cast<double>(s);
        os << "<line x1=\"" << left + pw - 150 << "\" y1=\"" << ly << "\" x2=\"" << left + pw - 130 << "\" y2=\""
           << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw - 125 << "\" y=\"" << ly + 4 << "\">" << escape(series.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace mg

#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mrh::cli {

namespace {

std::string esc(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// "Nice" tick step covering roughly five intervals.
double nice_step(double span) {
    if (!(span > 0.0)) return 1.0;
    double raw = span / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double frac = raw / mag;
    double step;
    if (frac < 1.5) step = 1.0;
    else if (frac < 3.5) step = 2.0;
    else if (frac < 7.5) step = 5.0;
    else step = 10.0;
    return step * mag;
}

}  // namespace

std::string plot_svg(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<PlotSeries>& series,
                     const std::vector<std::string>& annotations) {
    const double width = 760.0, height = 520.0;
    const double ml = 78.0, mr = 24.0, mt = 48.0, mb = 62.0;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y); ymax = std::max(ymax, y);
        }
    if (!std::isfinite(xmin)) { xmin = 0.0; xmax = 1.0; ymin = 0.0; ymax = 1.0; }
    if (xmax <= xmin) { xmax = xmin + 1.0; }
    if (ymax <= ymin) { ymax = ymin + 1.0; }
    const double xpad = 0.04 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
    xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
       << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\""
       << " text-anchor=\"middle\">" << esc(title) << "</text>\n";

    // Axes frame.
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

    // Ticks and grid lines.
    const double xstep = nice_step(xmax - xmin), ystep = nice_step(ymax - ymin);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-12 * xstep; t += xstep) {
        const double px = X(t);
        os << "<line x1=\"" << num(px) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(px)
           << "\" y2=\"" << num(mt + ph) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << num(px) << "\" y=\"" << num(mt + ph + 18)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
           << esc(tick_label(std::abs(t) < 1e-12 * xstep ? 0.0 : t)) << "</text>\n";
    }
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-12 * ystep; t += ystep) {
        const double py = Y(t);
        os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(py) << "\" x2=\"" << num(ml + pw)
           << "\" y2=\"" << num(py) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(py + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
           << esc(tick_label(std::abs(t) < 1e-12 * ystep ? 0.0 : t)) << "</text>\n";
    }
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" << esc(xlabel)
       << "</text>\n";
    os << "<text x=\"20\" y=\"" << mt + ph / 2
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\""
       << " transform=\"rotate(-90 20 " << mt + ph / 2 << ")\">" << esc(ylabel) << "</text>\n";

    // Data.
    for (const auto& s : series) {
        if (s.scatter) {
            os << "<g fill=\"" << esc(s.color) << "\" fill-opacity=\"0.45\">\n";
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                os << "<circle cx=\"" << num(X(x)) << "\" cy=\"" << num(Y(y)) << "\" r=\""
                   << s.marker_radius << "\"/>\n";
            }
            os << "</g>\n";
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << esc(s.color)
               << "\" stroke-width=\"1.8\" points=\"";
            bool first = true;
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                if (!first) os << ' ';
                os << num(X(x)) << ',' << num(Y(y));
                first = false;
            }
            os << "\"/>\n";
        }
    }

    // Legend (top-right inside the frame).
    double ly = mt + 16;
    for (const auto& s : series) {
        if (s.label.empty()) continue;
        const double lx = ml + pw - 210;
        if (s.scatter)
            os << "<circle cx=\"" << num(lx + 9) << "\" cy=\"" << num(ly - 4) << "\" r=\"4\" fill=\""
               << esc(s.color) << "\" fill-opacity=\"0.6\"/>\n";
        else
            os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 18)
               << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << esc(s.color)
               << "\" stroke-width=\"2.5\"/>\n";
        os << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << esc(s.label) << "</text>\n";
        ly += 17;
    }

    // Annotations (top-left inside the frame).
    double ay = mt + 16;
    for (const auto& a : annotations) {
        os << "<text x=\"" << num(ml + 10) << "\" y=\"" << num(ay)
           << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">" << esc(a)
           << "</text>\n";
        ay += 17;
    }

    os << "</svg>\n";
    return os.str();
}

}  // namespace mrh::cli

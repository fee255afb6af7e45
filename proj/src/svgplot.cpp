#include "sdsim/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdsim/config.hpp"
#include "sdsim/errors.hpp"

namespace sds::plot {

namespace {

constexpr double kWidth = 720.0, kHeight = 540.0;
constexpr double kLeft = 80.0, kRight = 30.0, kTop = 48.0, kBottom = 64.0;
const char* kColors[] = {"#1f6fb2", "#c23b22", "#2e8540", "#8031a7"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Axis {
    bool log = false;
    double lo = 0.0, hi = 1.0;  // transformed coordinates

    double transform(double v) const {
        if (!log) return v;
        if (!(v > 0.0)) throw ConfigError("log axis requires positive values");
        return std::log10(v);
    }
    double unit(double v) const { return (transform(v) - lo) / (hi - lo); }
};

Axis fit_axis(bool log, double lo, double hi) {
    Axis ax;
    ax.log = log;
    ax.lo = ax.transform(lo);
    ax.hi = ax.transform(hi);
    if (ax.hi <= ax.lo) {
        const double pad = std::max(1.0, std::abs(ax.lo)) * 0.05;
        ax.lo -= pad;
        ax.hi += pad;
    } else {
        const double pad = (ax.hi - ax.lo) * 0.06;
        ax.lo -= pad;
        ax.hi += pad;
    }
    return ax;
}

std::vector<double> ticks_for(const Axis& ax) {
    std::vector<double> ticks;  // transformed positions
    if (ax.log) {
        for (int k = static_cast<int>(std::ceil(ax.lo)); k <= static_cast<int>(std::floor(ax.hi));
             ++k)
            ticks.push_back(static_cast<double>(k));
        if (ticks.empty()) ticks = {ax.lo, ax.hi};
        return ticks;
    }
    const double span = ax.hi - ax.lo;
    double step = std::pow(10.0, std::floor(std::log10(span / 4.0)));
    if (span / step > 8.0) step *= 2.0;
    if (span / step > 8.0) step *= 2.5;
    const double first = std::ceil(ax.lo / step) * step;
    for (double t = first; t <= ax.hi + step * 1e-9; t += step) ticks.push_back(t);
    return ticks;
}

std::string tick_label(const Axis& ax, double t) {
    if (ax.log) {
        std::ostringstream out;
        out << "1e" << static_cast<int>(std::lround(t));
        return out.str();
    }
    const double rounded = std::abs(t) < 1e-12 ? 0.0 : t;
    return config::format_number(rounded);
}

} // namespace

std::string chart(const std::string& title, const std::string& x_label,
                  const std::string& y_label, const std::vector<Series>& series,
                  bool log_x, bool log_y, double slope_guide) {
    double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
    bool any = false;
    for (const auto& s : series) {
        for (const auto& pt : s.points) {
            if (!std::isfinite(pt[0]) || !std::isfinite(pt[1])) continue;
            if (log_x && !(pt[0] > 0.0)) continue;
            if (log_y && !(pt[1] > 0.0)) continue;
            if (!any) {
                x_lo = x_hi = pt[0];
                y_lo = y_hi = pt[1];
                any = true;
            } else {
                x_lo = std::min(x_lo, pt[0]);
                x_hi = std::max(x_hi, pt[0]);
                y_lo = std::min(y_lo, pt[1]);
                y_hi = std::max(y_hi, pt[1]);
            }
        }
    }
    if (!any) throw ConfigError("chart needs at least one finite point");

    const Axis ax = fit_axis(log_x, x_lo, x_hi);
    const Axis ay = fit_axis(log_y, y_lo, y_hi);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto px = [&](double v) { return kLeft + ax.unit(v) * plot_w; };
    const auto py = [&](double v) { return kTop + (1.0 - ay.unit(v)) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"17\">" << escape(title) << "</text>\n";

    for (double t : ticks_for(ax)) {
        const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * plot_w;
        out << "<line x1=\"" << x << "\" y1=\"" << kTop << "\" x2=\"" << x << "\" y2=\""
            << kTop + plot_h << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << kTop + plot_h + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << tick_label(ax, t) << "</text>\n";
    }
    for (double t : ticks_for(ay)) {
        const double y = kTop + (1.0 - (t - ay.lo) / (ay.hi - ay.lo)) * plot_h;
        out << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + plot_w
            << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << tick_label(ay, t) << "</text>\n";
    }
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << escape(x_label) << "</text>\n";
    out << "<text x=\"20\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
        << "transform=\"rotate(-90 20 " << kTop + plot_h / 2 << ")\">" << escape(y_label)
        << "</text>\n";

    if (std::isfinite(slope_guide) && log_x && log_y && !series.empty() &&
        !series[0].points.empty()) {
        const auto& anchor = series[0].points.front();
        const double lx0 = std::log10(anchor[0]);
        const double ly0 = std::log10(anchor[1]);
        const double gy_lo = ly0 + slope_guide * (ax.lo - lx0);
        const double gy_hi = ly0 + slope_guide * (ax.hi - lx0);
        const auto gy = [&](double ty) {
            return kTop + (1.0 - (ty - ay.lo) / (ay.hi - ay.lo)) * plot_h;
        };
        out << "<line x1=\"" << kLeft << "\" y1=\"" << gy(gy_lo) << "\" x2=\"" << kLeft + plot_w
            << "\" y2=\"" << gy(gy_hi)
            << "\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n";
        out << "<text x=\"" << kLeft + plot_w - 6 << "\" y=\"" << gy(gy_hi) - 6
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
            << "fill=\"#666666\">slope " << config::format_number(slope_guide)
            << "</text>\n";
    }

    const auto plottable = [&](const std::array<double, 2>& pt) {
        if (!std::isfinite(pt[0]) || !std::isfinite(pt[1])) return false;
        if (log_x && !(pt[0] > 0.0)) return false;
        if (log_y && !(pt[1] > 0.0)) return false;
        return true;
    };
    int color = 0;
    double legend_y = kTop + 14.0;
    for (const auto& s : series) {
        const char* stroke = kColors[color % 4];
        ++color;
        out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& pt : s.points)
            if (plottable(pt)) out << px(pt[0]) << ',' << py(pt[1]) << ' ';
        out << "\"/>\n";
        for (const auto& pt : s.points)
            if (plottable(pt))
                out << "<circle cx=\"" << px(pt[0]) << "\" cy=\"" << py(pt[1])
                    << "\" r=\"3\" fill=\"" << stroke << "\"/>\n";
        if (!s.label.empty()) {
            out << "<text x=\"" << kLeft + plot_w - 10 << "\" y=\"" << legend_y
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
                << stroke << "\">" << escape(s.label) << "</text>\n";
            legend_y += 16.0;
        }
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace sds::plot

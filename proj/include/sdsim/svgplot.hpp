#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

namespace sds::plot {

struct Series {
    std::string label;
    std::vector<std::array<double, 2>> points;
};

/// Self-contained SVG chart: axes with tick labels, one polyline with
/// markers per series, optional legend. Log axes place ticks at powers of
/// ten. When slope_guide is finite (and both axes are logarithmic) a dashed
/// line with that log-log slope is anchored at the first point of the first
/// series. Non-positive values on a log axis throw ConfigError.
std::string chart(const std::string& title, const std::string& x_label,
                  const std::string& y_label, const std::vector<Series>& series,
                  bool log_x, bool log_y,
                  double slope_guide = std::numeric_limits<double>::quiet_NaN());

} // namespace sds::plot

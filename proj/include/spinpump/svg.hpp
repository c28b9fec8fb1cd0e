#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spinpump {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color;  // empty picks from a default cycle
};

/// Self-contained SVG line chart: frame, ticks, labels, one polyline per
/// series and a legend when labels are present.
void write_svg_chart(const std::filesystem::path& path,
                     const std::string& title, const std::string& x_label,
                     const std::string& y_label,
                     const std::vector<SvgSeries>& series);

}  // namespace spinpump

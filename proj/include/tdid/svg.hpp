#pragma once

#include <string>
#include <vector>

namespace tdid {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Render a simple line chart (axes, ticks, legend) as an SVG document.
std::string render_line_plot(const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series,
                             int width = 800, int height = 480);

}  // namespace tdid

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wloja::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  /// Logarithmic y axis; nonpositive points are dropped.
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Line plot with axes, ticks and a legend as a standalone SVG document.
void line_plot(std::ostream& os, const std::vector<Series>& series, const PlotOptions& options);

}  // namespace wloja::svg

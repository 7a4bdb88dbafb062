#pragma once

#include <span>
#include <string>
#include <vector>

namespace roadozone::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;  ///< empty picks from the default palette
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Standalone SVG line chart.
std::string line_chart(const std::vector<Series>& series, const Axes& axes, int width = 720, int height = 440);

/// Standalone SVG heatmap of values[j * nx + i]; row j = 0 is drawn at the bottom.
std::string heatmap(std::span<const double> values, std::size_t nx, std::size_t ny, double x_extent,
                    double y_extent, const Axes& axes, int width = 720, int height = 440);

void write_file(const std::string& path, const std::string& content);

}  // namespace roadozone::plot

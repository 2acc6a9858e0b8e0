#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace puforge::cli {

struct Series {
  std::string name;
  std::vector<double> y;
  std::string color;
};

/// Minimal SVG line chart sharing one x axis across all series.
void write_line_plot_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::vector<double>& x,
                         const std::vector<Series>& series);

}  // namespace puforge::cli

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace handsoff {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// One stacked panel with shared-x polylines.
struct Panel {
  std::string title;
  std::vector<Series> series;
};

/// Minimal SVG document: stacked panels, each with a frame, a zero line,
/// min/max tick labels and a legend.
std::string render_svg(const std::vector<Panel>& panels, double width = 800.0,
                       double panel_height = 220.0);

void save_svg(const std::vector<Panel>& panels, const std::filesystem::path& path);

}  // namespace handsoff

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace scr::harness {

struct PanelPoint {
  double x = 0, y = 0;
  int cls = 0;
};

// One scatter-plus-boundary panel in data coordinates [lo, hi]^2.
struct Panel {
  std::string title;
  std::vector<PanelPoint> points;
  std::vector<std::pair<double, double>> boundary;  // polyline, data coords
  double lo = -8.0, hi = 8.0;
};

// Fixed-size SVG grid of panels, ncols per row.
std::string render_panels(const std::vector<Panel>& panels, std::size_t ncols);

}  // namespace scr::harness

#include "scr/harness/plot.hpp"

#include <sstream>

namespace scr::harness {

namespace {

constexpr double kPanel = 220.0;
constexpr double kPad = 36.0;

const char* color_for(int cls) { return cls == 0 ? "#d95f02" : "#1b9e77"; }

}  // namespace

std::string render_panels(const std::vector<Panel>& panels, std::size_t ncols) {
  const std::size_t nrows = panels.empty() ? 0 : (panels.size() + ncols - 1) / ncols;
  const double width = kPad + ncols * (kPanel + kPad);
  const double height = kPad + nrows * (kPanel + kPad);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t i = 0; i < panels.size(); ++i) {
    const Panel& p = panels[i];
    const double ox = kPad + static_cast<double>(i % ncols) * (kPanel + kPad);
    const double oy = kPad + static_cast<double>(i / ncols) * (kPanel + kPad);
    const double span = p.hi - p.lo;
    auto px = [&](double x) { return ox + (x - p.lo) / span * kPanel; };
    auto py = [&](double y) { return oy + kPanel - (y - p.lo) / span * kPanel; };

    svg << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << kPanel << "\" height=\""
        << kPanel << "\" fill=\"none\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << ox + kPanel / 2 << "\" y=\"" << oy - 8
        << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">" << p.title
        << "</text>\n";

    for (const auto& pt : p.points) {
      if (pt.x < p.lo || pt.x > p.hi || pt.y < p.lo || pt.y > p.hi) continue;
      svg << "<circle cx=\"" << px(pt.x) << "\" cy=\"" << py(pt.y)
          << "\" r=\"1.8\" fill=\"" << color_for(pt.cls) << "\" fill-opacity=\"0.6\"/>\n";
    }

    if (p.boundary.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"#333\" stroke-width=\"1.6\" points=\"";
      for (const auto& [bx, by] : p.boundary) svg << px(bx) << "," << py(by) << " ";
      svg << "\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace scr::harness

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace scr::proposal {

struct BoundingBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // pixels, x2 > x1 and y2 > y1
};

struct ObjectMeta {
  std::string category;
  BoundingBox box;
};

// Row-major H x W non-negative attention energies. Empty (h*w == 0) when the
// instance carries no visual explanation.
struct AttentionMap {
  std::size_t h = 0, w = 0;
  std::vector<double> values;
  bool empty() const { return h * w == 0; }
};

}  // namespace scr::proposal

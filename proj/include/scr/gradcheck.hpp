#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "scr/autodiff/tensor.hpp"

namespace scr {

// Central-difference gradient of a scalar-valued function, evaluated without
// touching the tape. Used as an independent oracle in tests.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<autodiff::Tensor>&)>& f,
    std::vector<autodiff::Tensor> inputs, std::size_t which, double h = 1e-5) {
  autodiff::NoGradGuard ng;
  autodiff::Tensor& x = inputs[which];
  std::vector<double> out(x.numel(), 0.0);
  std::vector<double>& xd = x.mutable_data();
  for (std::size_t k = 0; k < x.numel(); ++k) {
    const double keep = xd[k];
    xd[k] = keep + h;
    const double fp = f(inputs);
    xd[k] = keep - h;
    const double fm = f(inputs);
    xd[k] = keep;
    out[k] = (fp - fm) / (2.0 * h);
  }
  return out;
}

inline double max_rel_err(const std::vector<double>& got, const std::vector<double>& want,
                          double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size() && i < want.size(); ++i) {
    const double scale = std::max({std::abs(got[i]), std::abs(want[i]), floor});
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  return worst;
}

}  // namespace scr

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scr/autodiff/tensor.hpp"

namespace scr::autodiff {

// Adam with the standard bias-corrected moment estimates. Updates are applied
// in place to the parameter buffers, so every tensor handed in must be a leaf.
class Adam {
 public:
  struct Param {
    Tensor tensor;
    std::string name;
  };

  Adam(std::vector<Param> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // One update from the given gradients (same order as the params). Throws if
  // a gradient is non-finite or shaped wrong; the message names the parameter.
  void step(const std::vector<Tensor>& grads);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  std::size_t size() const { return params_.size(); }
  const Param& param(std::size_t i) const { return params_[i]; }

 private:
  std::vector<Param> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace scr::autodiff

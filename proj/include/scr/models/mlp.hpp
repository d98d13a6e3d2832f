#pragma once

#include <cstdint>
#include <vector>

#include "scr/autodiff/adam.hpp"
#include "scr/autodiff/tensor.hpp"

namespace scr::models {

struct MlpConfig {
  std::size_t in_dim = 2;
  std::size_t hidden = 256;
  std::size_t depth = 15;  // total weight layers, output layer included
  std::size_t n_classes = 2;
};

// Feed-forward classifier: relu hidden layers, one independent sigmoid per
// class at the output (multi-label contract, paired with the BCE loss).
class MlpClassifier {
 public:
  MlpClassifier(MlpConfig cfg, std::uint64_t seed);

  // [n x in_dim] -> [n x n_classes], every entry in (0, 1).
  autodiff::Tensor forward(const autodiff::Tensor& x) const;

  std::vector<autodiff::Adam::Param> params();
  const MlpConfig& config() const { return cfg_; }

 private:
  MlpConfig cfg_;
  std::vector<autodiff::Tensor> w_, b_;
};

}  // namespace scr::models

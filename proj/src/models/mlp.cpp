#include "scr/models/mlp.hpp"

#include <random>
#include <stdexcept>
#include <string>

#include "scr/autodiff/ops.hpp"
#include "scr/models/init.hpp"

namespace scr::models {

using namespace autodiff;

MlpClassifier::MlpClassifier(MlpConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.depth < 1 || cfg_.in_dim < 1 || cfg_.n_classes < 1 ||
      (cfg_.depth > 1 && cfg_.hidden < 1)) {
    throw std::runtime_error("mlp: invalid configuration");
  }
  std::mt19937_64 rng(seed);
  std::size_t in = cfg_.in_dim;
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    const std::size_t out = l + 1 == cfg_.depth ? cfg_.n_classes : cfg_.hidden;
    w_.push_back(uniform_fan_in(rng, {in, out}, in));
    b_.push_back(uniform_fan_in(rng, {out}, in));
    in = out;
  }
}

Tensor MlpClassifier::forward(const Tensor& x) const {
  if (!x.is_matrix() || x.cols() != cfg_.in_dim) {
    throw std::runtime_error("mlp: expected [n x " + std::to_string(cfg_.in_dim) + "] input, got " +
                             shape_str(x.shape()));
  }
  const std::size_t n = x.rows();
  Tensor h = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Tensor z = add(matmul(h, w_[l]), repeat_rows(b_[l], n));
    h = l + 1 == w_.size() ? sigmoid(z) : relu(z);
  }
  return h;
}

std::vector<Adam::Param> MlpClassifier::params() {
  std::vector<Adam::Param> out;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    out.push_back({w_[l], "w" + std::to_string(l)});
    out.push_back({b_[l], "b" + std::to_string(l)});
  }
  return out;
}

}  // namespace scr::models

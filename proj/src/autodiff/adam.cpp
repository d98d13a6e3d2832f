#include "scr/autodiff/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace scr::autodiff {

Adam::Adam(std::vector<Param> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.tensor.defined()) throw std::runtime_error("adam: undefined parameter " + p.name);
    if (p.tensor.node()) throw std::runtime_error("adam: parameter is not a leaf: " + p.name);
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step(const std::vector<Tensor>& grads) {
  if (grads.size() != params_.size()) {
    throw std::runtime_error("adam: got " + std::to_string(grads.size()) + " gradients for " +
                             std::to_string(params_.size()) + " parameters");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const Tensor& g = grads[i];
    if (g.shape() != p.tensor.shape()) {
      throw std::runtime_error("adam: gradient shape " + shape_str(g.shape()) +
                               " does not match parameter " + p.name + " " +
                               shape_str(p.tensor.shape()));
    }
    const std::vector<double>& gd = g.data();
    std::vector<double>& pd = p.tensor.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double gk = gd[k];
      if (!std::isfinite(gk)) {
        throw std::runtime_error("adam: non-finite gradient for parameter " + p.name);
      }
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      pd[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace scr::autodiff

#include "scr/models/init.hpp"

#include <cmath>
#include <stdexcept>

namespace scr::models {

autodiff::Tensor uniform_fan_in(std::mt19937_64& rng, std::vector<std::size_t> shape,
                                std::size_t fan_in) {
  if (fan_in == 0) throw std::runtime_error("init: fan_in must be positive");
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-s, s);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = dist(rng);
  return autodiff::Tensor::from_data(std::move(shape), std::move(data), true);
}

}  // namespace scr::models

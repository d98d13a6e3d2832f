#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "scr/autodiff/tensor.hpp"

namespace scr::models {

// uniform(-s, s) with s = 1/sqrt(fan_in); the tensor is a trainable leaf.
autodiff::Tensor uniform_fan_in(std::mt19937_64& rng, std::vector<std::size_t> shape,
                                std::size_t fan_in);

}  // namespace scr::models

#pragma once

#include <vector>

#include "scr/autodiff/tensor.hpp"

namespace scr::autodiff {

/// Reverse-mode gradient of a scalar output with respect to `wrt`.
///
/// Tensors that do not participate in the output's graph (or do not require
/// grad) receive zeros. With `create_graph` the adjoint computation is
/// recorded on the tape, so the returned tensors can be differentiated
/// again (gradients of gradients).
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt,
                         bool create_graph = false);

}  // namespace scr::autodiff

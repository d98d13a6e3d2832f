#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "scr/autodiff/tensor.hpp"

namespace scr::sensitivity {

// A prediction bound to everything but the object features: maps an
// [n_obj x d_obj] matrix to per-answer confidences.
using PredictFn = std::function<autodiff::Tensor(const autodiff::Tensor& v)>;

// S(a, v_i): the plain sum of the gradient of answer a's confidence with
// respect to object i's feature vector. No relu on the gradient and no
// weighting by the features themselves. With create_graph the result stays
// differentiable with respect to upstream parameters.
autodiff::Tensor sensitivity(const PredictFn& f, const autodiff::Tensor& v, std::size_t answer,
                             std::size_t object, bool create_graph = false);

// S(a, ·) for every object: [n_obj].
autodiff::Tensor sensitivity_row(const PredictFn& f, const autodiff::Tensor& v, std::size_t answer,
                                 bool create_graph = false);

// Full matrix, one backward sweep per answer: [n_answers x n_obj].
autodiff::Tensor sensitivity_matrix(const PredictFn& f, const autodiff::Tensor& v,
                                    std::size_t n_answers, bool create_graph = false);

// max(s_j - s_i, 0) on already-computed sensitivities (scalar tensors).
autodiff::Tensor sensitivity_violation(const autodiff::Tensor& s_i, const autodiff::Tensor& s_j);

// The proposal object whose summed violations against every outside object
// is minimal; ties resolve to the lowest object index. Throws when the
// proposal is empty, repeats an index, or leaves no outside objects.
std::size_t most_influential(const std::vector<double>& s_row,
                             const std::vector<std::size_t>& proposal);

struct SensitivityReport {
  autodiff::Tensor s;  // n_answers x n_obj
  std::size_t v_star = 0;
  std::vector<std::size_t> proposal;
  bool create_graph = false;
  std::string to_json() const;
};

SensitivityReport make_report(const PredictFn& f, const autodiff::Tensor& v, std::size_t n_answers,
                              std::size_t a_gt, const std::vector<std::size_t>& proposal,
                              bool create_graph = false);

}  // namespace scr::sensitivity

#pragma once

#include <cstdint>
#include <vector>

#include "scr/autodiff/adam.hpp"
#include "scr/autodiff/tensor.hpp"

namespace scr::models {

struct QaConfig {
  std::size_t vocab = 64;  // closed vocabulary, includes the unk id
  std::size_t d_word = 16;
  std::size_t d_obj = 16;
  std::size_t hidden = 32;
  std::size_t n_answers = 12;
  std::size_t max_q_len = 14;
  std::size_t unk_id = 0;
};

// Attention QA model: a single-layer GRU encodes the question, each object
// is fused with the question by an elementwise product of projections, soft
// attention pools the objects, and a sigmoid head scores every answer
// independently. The head reads both the fused representation and the
// attention-pooled raw features, so confidences stay tightly coupled to the
// attended object's features. Every confidence is differentiable in every
// object feature.
class QaModel {
 public:
  QaModel(QaConfig cfg, std::uint64_t seed);

  // Final GRU hidden state over the token sequence. Rejects empty sequences,
  // sequences beyond max_q_len, and ids outside the vocabulary.
  autodiff::Tensor encode_question(const std::vector<std::size_t>& tokens) const;

  // [n_obj x d_obj] and question vector -> per-answer confidences in (0,1).
  autodiff::Tensor predict(const autodiff::Tensor& v, const autodiff::Tensor& q) const;
  // Variant with a non-negative per-object attention mask (0 removes the
  // object from the softmax entirely).
  autodiff::Tensor predict(const autodiff::Tensor& v, const autodiff::Tensor& q,
                           const autodiff::Tensor& mask) const;

  std::vector<autodiff::Adam::Param> params();
  const QaConfig& config() const { return cfg_; }

 private:
  QaConfig cfg_;
  autodiff::Tensor emb_;                                     // vocab x d_word
  autodiff::Tensor wz_, uz_, bz_, wr_, ur_, br_, wh_, uh_, bh_;  // GRU
  autodiff::Tensor wv_, bv_, wq_, bq_;                       // fusion projections
  autodiff::Tensor wa_;                                      // attention scorer
  autodiff::Tensor wo_, wu_, bo_;                            // answer head
};

}  // namespace scr::models

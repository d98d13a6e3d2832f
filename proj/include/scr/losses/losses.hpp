#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scr/autodiff/tensor.hpp"
#include "scr/models/qa_instance.hpp"
#include "scr/models/qa_model.hpp"
#include "scr/proposal/embedding_store.hpp"

namespace scr::losses {

// Mean binary cross entropy against soft targets, elementwise over any
// matching shapes. Confidences are clamped to [1e-12, 1 - 1e-12].
autodiff::Tensor vqa_loss(const autodiff::Tensor& p, const autodiff::Tensor& gold);

// Answers ranked strictly above the ground truth, descending confidence,
// at most `capacity` of them. Never contains a_gt or ties with it.
std::vector<std::size_t> build_bucket(const std::vector<double>& p, std::size_t a_gt,
                                      std::size_t capacity = 5);

// w(a) = cosine distance between summed word embeddings of the two answers.
// w(a_gt) = 0; an answer whose summed embedding is the zero vector gets the
// neutral weight 1.
double answer_weight(const std::string& answer, const std::string& gt,
                     const proposal::EmbeddingStore& store);

// min over proposal objects of the summed violations against every outside
// object, on an already-computed sensitivity row S(a_gt, ·). Gradients flow
// through the selected branch only.
autodiff::Tensor influence_strengthen_loss(const autodiff::Tensor& s_row,
                                           const std::vector<std::size_t>& proposal);

// Weighted sensitivity gaps at v*: sum of w_k * (s_bucket[k] - s_gt). Not
// clamped; both sides of each gap carry gradient.
autodiff::Tensor self_critical_loss(const std::vector<autodiff::Tensor>& s_bucket,
                                    const autodiff::Tensor& s_gt,
                                    const std::vector<double>& weights);

struct JointConfig {
  double lambda_infl = 20.0;
  double lambda_crit = 2000.0;
  std::size_t bucket_capacity = 5;
};

struct JointBreakdown {
  autodiff::Tensor total, l_vqa, l_infl, l_crit;
  std::size_t v_star = 0;
  std::vector<std::size_t> bucket;
  bool proposal_usable = false;
};

// Full per-instance objective: L_vqa + lambda_infl * L_infl + lambda_crit *
// L_crit. An empty proposal disables the two sensitivity terms and leaves
// plain L_vqa. answer_weights holds w(a) for every answer index.
JointBreakdown joint_loss(const models::QaModel& model, const models::QaInstance& inst,
                          const std::vector<std::size_t>& proposal,
                          const std::vector<double>& answer_weights, const JointConfig& cfg);

}  // namespace scr::losses

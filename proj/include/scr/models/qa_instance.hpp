#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scr/autodiff/tensor.hpp"
#include "scr/proposal/object_meta.hpp"

namespace scr::models {

// One QA example: object features, tokenized question, per-answer gold soft
// scores, and the optional annotations the proposal builders consume.
struct QaInstance {
  autodiff::Tensor v;                 // n_obj x d_obj object features
  std::vector<std::size_t> question;  // token ids
  std::string question_text;
  std::string answer_text;            // text of the ground-truth answer
  std::vector<double> gold;           // soft score per answer, in [0,1]
  std::size_t a_gt = 0;

  std::vector<proposal::ObjectMeta> objects;  // empty or one entry per object
  std::string explanation;                    // optional textual explanation
  proposal::AttentionMap attention;           // optional visual explanation
  double image_w = 0, image_h = 0;            // pixel extent the boxes live in
  std::string qtype;                          // optional question-type tag
};

// Enforces the structural invariants: at least two objects, gold scores in
// range, a_gt carrying the maximal gold score, annotations sized per object.
void validate_instance(const QaInstance& inst);

}  // namespace scr::models

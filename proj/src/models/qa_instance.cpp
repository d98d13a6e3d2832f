#include "scr/models/qa_instance.hpp"

#include <stdexcept>
#include <string>

namespace scr::models {

void validate_instance(const QaInstance& inst) {
  if (!inst.v.defined() || !inst.v.is_matrix() || inst.v.rows() < 2) {
    throw std::runtime_error("instance: needs at least two objects");
  }
  if (inst.gold.empty()) throw std::runtime_error("instance: empty gold scores");
  if (inst.a_gt >= inst.gold.size()) {
    throw std::runtime_error("instance: ground-truth index out of range");
  }
  double best = inst.gold[inst.a_gt];
  for (double s : inst.gold) {
    if (s < 0.0 || s > 1.0) throw std::runtime_error("instance: gold score outside [0,1]");
    if (s > best) {
      throw std::runtime_error("instance: ground-truth answer does not carry the top gold score");
    }
  }
  if (!inst.objects.empty() && inst.objects.size() != inst.v.rows()) {
    throw std::runtime_error("instance: object metadata count " +
                             std::to_string(inst.objects.size()) + " does not match " +
                             std::to_string(inst.v.rows()) + " feature rows");
  }
  if (!inst.attention.empty() && inst.attention.values.size() != inst.attention.h * inst.attention.w) {
    throw std::runtime_error("instance: attention map size mismatch");
  }
}

}  // namespace scr::models

#include "scr/losses/losses.hpp"

#include <algorithm>
#include <stdexcept>

#include "scr/autodiff/grad.hpp"
#include "scr/autodiff/ops.hpp"
#include "scr/sensitivity/sensitivity.hpp"

namespace scr::losses {

using namespace autodiff;

Tensor vqa_loss(const Tensor& p, const Tensor& gold) {
  if (p.shape() != gold.shape()) {
    throw std::runtime_error("vqa_loss: shape mismatch " + shape_str(p.shape()) + " vs " +
                             shape_str(gold.shape()));
  }
  for (double s : gold.data()) {
    if (s < 0.0 || s > 1.0) throw std::runtime_error("vqa_loss: gold score outside [0,1]");
  }
  const double eps = 1e-12;
  Tensor pc = clamp_max(clamp_min(p, eps), 1.0 - eps);
  Tensor pos = mul(gold, log(pc));
  Tensor neg_ = mul(sub(Tensor::scalar(1.0), gold), log(sub(Tensor::scalar(1.0), pc)));
  return neg(mean(add(pos, neg_)));
}

std::vector<std::size_t> build_bucket(const std::vector<double>& p, std::size_t a_gt,
                                      std::size_t capacity) {
  if (a_gt >= p.size()) throw std::runtime_error("build_bucket: ground truth index out of range");
  std::vector<std::size_t> above;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (a != a_gt && p[a] > p[a_gt]) above.push_back(a);
  }
  std::stable_sort(above.begin(), above.end(), [&](std::size_t a, std::size_t b) {
    if (p[a] != p[b]) return p[a] > p[b];
    return a < b;
  });
  if (above.size() > capacity) above.resize(capacity);
  return above;
}

double answer_weight(const std::string& answer, const std::string& gt,
                     const proposal::EmbeddingStore& store) {
  if (answer == gt) return 0.0;
  const auto ea = store.phrase(answer);
  const auto eg = store.phrase(gt);
  auto is_zero = [](const std::vector<double>& v) {
    for (double x : v) {
      if (x != 0.0) return false;
    }
    return true;
  };
  if (is_zero(ea) || is_zero(eg)) return 1.0;
  return proposal::cosine_distance(eg, ea);
}

Tensor influence_strengthen_loss(const Tensor& s_row, const std::vector<std::size_t>& proposal) {
  const std::size_t v_star = sensitivity::most_influential(s_row.data(), proposal);
  Tensor si = slice(s_row, v_star, 1);
  std::vector<bool> inside(s_row.numel(), false);
  for (std::size_t i : proposal) inside[i] = true;
  Tensor acc = Tensor::zeros({1});
  for (std::size_t j = 0; j < s_row.numel(); ++j) {
    if (inside[j]) continue;
    acc = add(acc, relu(sub(slice(s_row, j, 1), si)));
  }
  return acc;
}

Tensor self_critical_loss(const std::vector<Tensor>& s_bucket, const Tensor& s_gt,
                          const std::vector<double>& weights) {
  if (s_bucket.size() != weights.size()) {
    throw std::runtime_error("self_critical_loss: one weight per bucket answer expected");
  }
  Tensor acc = Tensor::zeros({1});
  for (std::size_t k = 0; k < s_bucket.size(); ++k) {
    acc = add(acc, mul_scalar(sub(s_bucket[k], s_gt), weights[k]));
  }
  return acc;
}

JointBreakdown joint_loss(const models::QaModel& model, const models::QaInstance& inst,
                          const std::vector<std::size_t>& proposal,
                          const std::vector<double>& answer_weights, const JointConfig& cfg) {
  const std::size_t n_answers = model.config().n_answers;
  if (inst.gold.size() != n_answers || answer_weights.size() != n_answers) {
    throw std::runtime_error("joint_loss: per-answer arrays must match the model's answer count");
  }

  JointBreakdown out;
  GradModeGuard record(true);  // gradient terms inside the loss need the tape
  Tensor vg = Tensor::from_data(inst.v.shape(), inst.v.data(), true);
  Tensor q = model.encode_question(inst.question);
  Tensor p = model.predict(vg, q);
  Tensor gold = Tensor::from_data({n_answers}, inst.gold);
  out.l_vqa = vqa_loss(p, gold);
  out.l_infl = Tensor::zeros({1});
  out.l_crit = Tensor::zeros({1});
  out.proposal_usable = !proposal.empty();

  if (out.proposal_usable && (cfg.lambda_infl != 0.0 || cfg.lambda_crit != 0.0)) {
    Tensor g_gt = grad(slice(p, inst.a_gt, 1), {vg}, /*create_graph=*/true)[0];
    Tensor s_gt_row = sum_axis(g_gt, 1);
    out.v_star = sensitivity::most_influential(s_gt_row.data(), proposal);
    if (cfg.lambda_infl != 0.0) out.l_infl = influence_strengthen_loss(s_gt_row, proposal);

    if (cfg.lambda_crit != 0.0) {
      out.bucket = build_bucket(p.data(), inst.a_gt, cfg.bucket_capacity);
      if (!out.bucket.empty()) {
        Tensor s_gt_star = slice(s_gt_row, out.v_star, 1);
        std::vector<Tensor> s_bucket;
        std::vector<double> w;
        for (std::size_t a : out.bucket) {
          Tensor g_a = grad(slice(p, a, 1), {vg}, /*create_graph=*/true)[0];
          s_bucket.push_back(sum(row(g_a, out.v_star)));
          w.push_back(answer_weights[a]);
        }
        out.l_crit = self_critical_loss(s_bucket, s_gt_star, w);
      }
    }
  }

  out.total = out.l_vqa;
  if (cfg.lambda_infl != 0.0) out.total = add(out.total, mul_scalar(out.l_infl, cfg.lambda_infl));
  if (cfg.lambda_crit != 0.0) out.total = add(out.total, mul_scalar(out.l_crit, cfg.lambda_crit));
  return out;
}

}  // namespace scr::losses

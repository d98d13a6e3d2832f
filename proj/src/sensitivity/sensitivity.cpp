#include "scr/sensitivity/sensitivity.hpp"

#include <json.hpp>

#include <set>
#include <stdexcept>

#include "scr/autodiff/grad.hpp"
#include "scr/autodiff/ops.hpp"

namespace scr::sensitivity {

using namespace autodiff;

namespace {

// The instance features arrive as constants; gradients need a leaf.
Tensor as_leaf(const Tensor& v) {
  if (!v.is_matrix()) {
    throw std::runtime_error("sensitivity: expected an [n_obj x d_obj] matrix, got " +
                             shape_str(v.shape()));
  }
  if (v.requires_grad()) return v;
  return Tensor::from_data(v.shape(), v.data(), true);
}

Tensor check_confidences(const Tensor& p, std::size_t needed) {
  if (p.rank() != 1 || p.numel() < needed) {
    throw std::runtime_error("sensitivity: prediction must be a per-answer vector");
  }
  return p;
}

}  // namespace

Tensor sensitivity_row(const PredictFn& f, const Tensor& v, std::size_t answer,
                       bool create_graph) {
  GradModeGuard record(true);  // the attribution needs a tape even in no-grad contexts
  Tensor vg = as_leaf(v);
  Tensor p = check_confidences(f(vg), answer + 1);
  Tensor g = grad(slice(p, answer, 1), {vg}, create_graph)[0];
  return sum_axis(g, 1);
}

Tensor sensitivity(const PredictFn& f, const Tensor& v, std::size_t answer, std::size_t object,
                   bool create_graph) {
  if (object >= v.rows()) throw std::runtime_error("sensitivity: object index out of range");
  return slice(sensitivity_row(f, v, answer, create_graph), object, 1);
}

Tensor sensitivity_matrix(const PredictFn& f, const Tensor& v, std::size_t n_answers,
                          bool create_graph) {
  if (n_answers == 0) throw std::runtime_error("sensitivity: no answers");
  GradModeGuard record(true);
  Tensor vg = as_leaf(v);
  Tensor p = check_confidences(f(vg), n_answers);
  std::vector<Tensor> rows;
  rows.reserve(n_answers);
  for (std::size_t a = 0; a < n_answers; ++a) {
    Tensor g = grad(slice(p, a, 1), {vg}, create_graph)[0];
    rows.push_back(sum_axis(g, 1));
  }
  return reshape(concat(rows), {n_answers, v.rows()});
}

Tensor sensitivity_violation(const Tensor& s_i, const Tensor& s_j) {
  return relu(sub(s_j, s_i));
}

std::size_t most_influential(const std::vector<double>& s_row,
                             const std::vector<std::size_t>& proposal) {
  const std::size_t n = s_row.size();
  if (proposal.empty()) throw std::runtime_error("most_influential: empty proposal set");
  std::set<std::size_t> inside;
  for (std::size_t i : proposal) {
    if (i >= n) throw std::runtime_error("most_influential: proposal index out of range");
    if (!inside.insert(i).second) {
      throw std::runtime_error("most_influential: repeated proposal index");
    }
  }
  if (inside.size() == n) {
    throw std::runtime_error("most_influential: proposal covers every object, outside set empty");
  }

  std::size_t best = 0;
  double best_sum = 0.0;
  bool first = true;
  for (std::size_t i : proposal) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (inside.count(j)) continue;
      const double gap = s_row[j] - s_row[i];
      if (gap > 0.0) sum += gap;
    }
    if (first || sum < best_sum || (sum == best_sum && i < best)) {
      best = i;
      best_sum = sum;
      first = false;
    }
  }
  return best;
}

std::string SensitivityReport::to_json() const {
  nlohmann::json j;
  j["n_answers"] = s.rows();
  j["n_objects"] = s.cols();
  auto& rows = j["sensitivities"] = nlohmann::json::array();
  for (std::size_t a = 0; a < s.rows(); ++a) {
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t i = 0; i < s.cols(); ++i) r.push_back(s.at(a, i));
    rows.push_back(std::move(r));
  }
  j["v_star"] = v_star;
  j["proposal"] = proposal;
  j["create_graph"] = create_graph;
  return j.dump(2);
}

SensitivityReport make_report(const PredictFn& f, const Tensor& v, std::size_t n_answers,
                              std::size_t a_gt, const std::vector<std::size_t>& proposal,
                              bool create_graph) {
  if (a_gt >= n_answers) throw std::runtime_error("sensitivity: ground-truth answer out of range");
  SensitivityReport rep;
  rep.s = sensitivity_matrix(f, v, n_answers, create_graph);
  rep.proposal = proposal;
  rep.create_graph = create_graph;
  std::vector<double> gt_row(rep.s.cols());
  for (std::size_t i = 0; i < gt_row.size(); ++i) gt_row[i] = rep.s.at(a_gt, i);
  rep.v_star = most_influential(gt_row, proposal);
  return rep;
}

}  // namespace scr::sensitivity

#include "scr/metrics/metrics.hpp"

#include <json.hpp>

#include <sstream>
#include <stdexcept>

#include "scr/autodiff/ops.hpp"
#include "scr/sensitivity/sensitivity.hpp"

namespace scr::metrics {

using namespace autodiff;

double soft_score(std::size_t prediction, const std::vector<double>& gold) {
  if (prediction >= gold.size()) throw std::runtime_error("soft_score: index out of range");
  return gold[prediction];
}

EvalReport evaluate(const models::QaModel& model, const std::vector<models::QaInstance>& data,
                    const std::vector<std::vector<std::size_t>>& proposals) {
  if (data.empty()) throw std::runtime_error("evaluate: empty dataset");
  if (proposals.size() != data.size()) {
    throw std::runtime_error("evaluate: one proposal set per instance expected");
  }

  EvalReport rep;
  rep.n_instances = data.size();
  double soft_sum = 0.0;
  std::map<std::string, std::pair<double, std::size_t>> type_acc;

  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& inst = data[n];
    // Evaluation never differentiates through the question encoder.
    Tensor q = [&] {
      NoGradGuard ng;
      return model.encode_question(inst.question);
    }();
    const auto& proposal = proposals[n];

    std::size_t a_pred;
    {
      NoGradGuard ng;
      a_pred = argmax(model.predict(inst.v, q).data());
    }
    if (proposal.empty()) {
      ++rep.excluded;
    } else {
      auto f = [&](const Tensor& v) { return model.predict(v, q); };
      auto rep_s = sensitivity::make_report(f, inst.v, model.config().n_answers, inst.a_gt,
                                            proposal, false);
      const double gap = rep_s.s.at(a_pred, rep_s.v_star) - rep_s.s.at(inst.a_gt, rep_s.v_star);
      ++rep.counted;
      if (gap > 0.0 && soft_score(a_pred, inst.gold) == 0.0) ++rep.false_sensitive;
    }

    const double sc = soft_score(a_pred, inst.gold);
    soft_sum += sc;
    if (!inst.qtype.empty()) {
      type_acc[inst.qtype].first += sc;
      type_acc[inst.qtype].second += 1;
    }
  }

  rep.soft = soft_sum / static_cast<double>(rep.n_instances);
  rep.fsr = rep.counted == 0
                ? 0.0
                : static_cast<double>(rep.false_sensitive) / static_cast<double>(rep.counted);
  for (auto& [k, v] : type_acc) rep.per_type[k] = v.first / static_cast<double>(v.second);
  return rep;
}

double false_sensitivity_rate(const models::QaModel& model,
                              const std::vector<models::QaInstance>& data,
                              const std::vector<std::vector<std::size_t>>& proposals) {
  return evaluate(model, data, proposals).fsr;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["soft_score"] = soft;
  j["fsr"] = fsr;
  j["n_instances"] = n_instances;
  j["fsr_counted"] = counted;
  j["false_sensitive"] = false_sensitive;
  j["excluded"] = excluded;
  if (!per_type.empty()) j["per_type"] = per_type;
  return j.dump(2);
}

std::string EvalReport::csv_header() {
  return "soft_score,fsr,n_instances,fsr_counted,false_sensitive,excluded";
}

std::string EvalReport::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << soft << ',' << fsr << ',' << n_instances << ',' << counted << ',' << false_sensitive << ','
     << excluded;
  return os.str();
}

}  // namespace scr::metrics

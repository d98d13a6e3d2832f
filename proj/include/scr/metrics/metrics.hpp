#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "scr/models/qa_instance.hpp"
#include "scr/models/qa_model.hpp"

namespace scr::metrics {

// Partial-credit value of a prediction: the gold soft score at that index.
double soft_score(std::size_t prediction, const std::vector<double>& gold);

struct EvalReport {
  double soft = 0.0;               // mean soft score over all instances
  double fsr = 0.0;                // false-sensitivity violations / counted
  std::size_t n_instances = 0;     // all instances scored
  std::size_t counted = 0;         // instances with a usable proposal set
  std::size_t false_sensitive = 0;
  std::size_t excluded = 0;        // unusable proposal sets, left out of FSR
  std::map<std::string, double> per_type;  // mean soft score per question type

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// One pass over the dataset: soft score over everything, FSR over the
// instances whose proposal set is usable. An instance is false-sensitive
// when its (wrong, soft score exactly zero) predicted answer is strictly
// more sensitive to v* than the ground-truth answer.
EvalReport evaluate(const models::QaModel& model, const std::vector<models::QaInstance>& data,
                    const std::vector<std::vector<std::size_t>>& proposals);

// The rate alone; errors on an empty dataset.
double false_sensitivity_rate(const models::QaModel& model,
                              const std::vector<models::QaInstance>& data,
                              const std::vector<std::vector<std::size_t>>& proposals);

}  // namespace scr::metrics

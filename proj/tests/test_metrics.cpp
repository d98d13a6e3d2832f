#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scr/autodiff/ops.hpp"
#include "scr/metrics/metrics.hpp"
#include "scr/models/qa_instance.hpp"
#include "scr/models/qa_model.hpp"
#include "scr/sensitivity/sensitivity.hpp"

using namespace scr::autodiff;
using namespace scr::metrics;
using scr::models::QaConfig;
using scr::models::QaInstance;
using scr::models::QaModel;

namespace {

QaConfig tiny_qa() {
  QaConfig cfg;
  cfg.vocab = 10;
  cfg.d_word = 3;
  cfg.d_obj = 4;
  cfg.hidden = 5;
  cfg.n_answers = 4;
  cfg.max_q_len = 5;
  return cfg;
}

QaInstance random_instance(std::mt19937_64& rng, const QaConfig& cfg, std::size_t n_obj = 3) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> feats(n_obj * cfg.d_obj);
  for (auto& v : feats) v = dist(rng);
  QaInstance inst;
  inst.v = Tensor::from_data({n_obj, cfg.d_obj}, std::move(feats));
  std::uniform_int_distribution<std::size_t> tok(0, cfg.vocab - 1);
  for (int t = 0; t < 3; ++t) inst.question.push_back(tok(rng));
  inst.gold.assign(cfg.n_answers, 0.0);
  std::uniform_int_distribution<std::size_t> ans(0, cfg.n_answers - 1);
  inst.a_gt = ans(rng);
  inst.gold[inst.a_gt] = 1.0;
  return inst;
}

std::size_t predicted(const QaModel& model, const QaInstance& inst) {
  NoGradGuard ng;
  Tensor p = model.predict(inst.v, model.encode_question(inst.question));
  const auto& d = p.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

// Per-instance gap oracle built from the lower-level sensitivity calls.
double influence_gap(const QaModel& model, const QaInstance& inst,
                     const std::vector<std::size_t>& proposal) {
  Tensor q;
  {
    NoGradGuard ng;
    q = model.encode_question(inst.question);
  }
  auto f = [&](const Tensor& v) { return model.predict(v, q); };
  Tensor s_gt = scr::sensitivity::sensitivity_row(f, inst.v, inst.a_gt);
  const std::size_t v_star = scr::sensitivity::most_influential(s_gt.data(), proposal);
  Tensor s_pred = scr::sensitivity::sensitivity_row(f, inst.v, predicted(model, inst));
  return s_pred.at(v_star) - s_gt.at(v_star);
}

}  // namespace

TEST_CASE("soft score lookup") {
  const std::vector<double> gold{0.0, 0.3, 1.0};
  CHECK(soft_score(2, gold) == 1.0);
  CHECK(soft_score(1, gold) == 0.3);
  CHECK(soft_score(0, gold) == 0.0);
  CHECK_THROWS(soft_score(3, gold));
  CHECK_THROWS(soft_score(0, {}));
}

TEST_CASE("evaluate rejects malformed inputs") {
  QaModel model(tiny_qa(), 1);
  CHECK_THROWS(evaluate(model, {}, {}));
  CHECK_THROWS(false_sensitivity_rate(model, {}, {}));
  std::mt19937_64 rng(2);
  std::vector<QaInstance> data{random_instance(rng, tiny_qa())};
  CHECK_THROWS(evaluate(model, data, {}));
}

TEST_CASE("aggregation over a crafted dataset") {
  QaModel model(tiny_qa(), 5);
  std::mt19937_64 rng(6);

  // Search for instances in each behavioural class; the margins keep the
  // classification stable.
  QaInstance correct, false_sens, insensitive;
  bool have_correct = false, have_fs = false, have_ins = false;
  for (int tries = 0; tries < 2000 && !(have_correct && have_fs && have_ins); ++tries) {
    QaInstance cand = random_instance(rng, tiny_qa());
    const std::size_t pred = predicted(model, cand);
    if (pred == cand.a_gt) {
      if (!have_correct) {
        correct = cand;
        have_correct = true;
      }
      continue;
    }
    const double gap = influence_gap(model, cand, {0});
    if (gap > 1e-6 && !have_fs) {
      false_sens = cand;
      have_fs = true;
    } else if (gap < -1e-6 && !have_ins) {
      insensitive = cand;
      have_ins = true;
    }
  }
  REQUIRE(have_correct);
  REQUIRE(have_fs);
  REQUIRE(have_ins);

  // Same wrong answer and positive gap, but partial credit: not counted as
  // false-sensitive because its soft score is nonzero.
  QaInstance partial = false_sens;
  partial.gold[predicted(model, partial)] = 0.3;

  QaInstance excluded_inst = correct;

  correct.qtype = "color";
  false_sens.qtype = "color";
  insensitive.qtype = "count";
  partial.qtype = "count";
  excluded_inst.qtype = "other";

  std::vector<QaInstance> data{correct, false_sens, insensitive, partial, excluded_inst};
  std::vector<std::vector<std::size_t>> proposals{{0}, {0}, {0}, {0}, {}};

  EvalReport rep = evaluate(model, data, proposals);
  CHECK(rep.n_instances == 5);
  CHECK(rep.counted == 4);
  CHECK(rep.excluded == 1);
  CHECK(rep.false_sensitive == 1);
  CHECK(rep.fsr == 0.25);
  CHECK(rep.soft == doctest::Approx((1.0 + 0.0 + 0.0 + 0.3 + 1.0) / 5.0).epsilon(1e-12));
  CHECK(rep.per_type.at("color") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.per_type.at("count") == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(rep.per_type.at("other") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(false_sensitivity_rate(model, data, proposals) == rep.fsr);

  // Dataset order does not matter.
  std::reverse(data.begin(), data.end());
  std::reverse(proposals.begin(), proposals.end());
  EvalReport rev = evaluate(model, data, proposals);
  CHECK(rev.fsr == rep.fsr);
  CHECK(rev.soft == doctest::Approx(rep.soft).epsilon(1e-15));
  CHECK(rev.false_sensitive == rep.false_sensitive);

  // Round-trip the serialized forms.
  auto parsed = nlohmann::json::parse(rep.to_json());
  CHECK(parsed.at("fsr").get<double>() == rep.fsr);
  CHECK(parsed.at("soft_score").get<double>() == rep.soft);
  CHECK(parsed.at("fsr_counted").get<std::size_t>() == rep.counted);
  CHECK(parsed.at("per_type").at("color").get<double>() == rep.per_type.at("color"));

  const std::string header = EvalReport::csv_header();
  const std::string row = rep.csv_row();
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(header.substr(0, header.find(',')) == "soft_score");
}

TEST_CASE("predicting the ground truth everywhere gives zero fsr") {
  QaModel model(tiny_qa(), 9);
  std::mt19937_64 rng(10);
  std::vector<QaInstance> data;
  std::vector<std::vector<std::size_t>> proposals;
  for (int i = 0; i < 10; ++i) {
    QaInstance inst = random_instance(rng, tiny_qa());
    inst.gold.assign(4, 0.0);
    inst.a_gt = predicted(model, inst);
    inst.gold[inst.a_gt] = 1.0;
    data.push_back(inst);
    proposals.push_back({0, 1});
  }
  EvalReport rep = evaluate(model, data, proposals);
  CHECK(rep.fsr == 0.0);
  CHECK(rep.soft == 1.0);
  CHECK(rep.counted == 10);
}

TEST_CASE("fsr over only unusable proposals is zero by convention") {
  QaModel model(tiny_qa(), 13);
  std::mt19937_64 rng(14);
  std::vector<QaInstance> data{random_instance(rng, tiny_qa()), random_instance(rng, tiny_qa())};
  std::vector<std::vector<std::size_t>> proposals{{}, {}};
  EvalReport rep = evaluate(model, data, proposals);
  CHECK(rep.counted == 0);
  CHECK(rep.excluded == 2);
  CHECK(rep.fsr == 0.0);
}

TEST_CASE("evaluate agrees with the instance-level oracle") {
  QaModel model(tiny_qa(), 21);
  std::mt19937_64 rng(22);
  std::vector<QaInstance> data;
  std::vector<std::vector<std::size_t>> proposals;
  for (int i = 0; i < 30; ++i) {
    data.push_back(random_instance(rng, tiny_qa()));
    if (i % 5 == 4) {
      proposals.push_back({});
    } else if (i % 2 == 0) {
      proposals.push_back({0});
    } else {
      proposals.push_back({1, 2});
    }
  }

  std::size_t counted = 0, fs = 0, excluded = 0;
  double soft_sum = 0.0;
  std::size_t wrong_counted = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t pred = predicted(model, data[i]);
    const double soft = data[i].gold[pred];
    soft_sum += soft;
    if (proposals[i].empty()) {
      ++excluded;
      continue;
    }
    ++counted;
    if (soft == 0.0) ++wrong_counted;
    const double gap = influence_gap(model, data[i], proposals[i]);
    if (gap > 0.0 && soft == 0.0) ++fs;
  }

  EvalReport rep = evaluate(model, data, proposals);
  CHECK(rep.counted == counted);
  CHECK(rep.excluded == excluded);
  CHECK(rep.false_sensitive == fs);
  CHECK(rep.fsr == doctest::Approx(static_cast<double>(fs) / counted).epsilon(1e-15));
  CHECK(rep.soft == doctest::Approx(soft_sum / 30.0).epsilon(1e-12));

  // False sensitivity only happens on zero-credit predictions.
  CHECK(rep.fsr <= static_cast<double>(wrong_counted) / static_cast<double>(counted));
}

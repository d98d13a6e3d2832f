#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "scr/autodiff/grad.hpp"
#include "scr/autodiff/ops.hpp"
#include "scr/gradcheck.hpp"
#include "scr/models/qa_model.hpp"
#include "scr/sensitivity/sensitivity.hpp"

using namespace scr::autodiff;
using namespace scr::sensitivity;
using scr::models::QaConfig;
using scr::models::QaModel;

namespace {

Tensor random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(r * c);
  for (auto& v : data) v = dist(rng);
  return Tensor::from_data({r, c}, std::move(data));
}

// Independent reimplementation of the argmin-over-summed-violations rule.
std::size_t brute_force_most_influential(const std::vector<double>& s,
                                         const std::vector<std::size_t>& proposal) {
  std::vector<bool> in(s.size(), false);
  for (auto i : proposal) in[i] = true;
  double best_sum = 0.0;
  std::size_t best = s.size();
  for (std::size_t i : proposal) {
    double total = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!in[j]) total += std::max(s[j] - s[i], 0.0);
    }
    if (best == s.size() || total < best_sum || (total == best_sum && i < best)) {
      best = i;
      best_sum = total;
    }
  }
  return best;
}

QaConfig tiny_qa() {
  QaConfig cfg;
  cfg.vocab = 12;
  cfg.d_word = 4;
  cfg.d_obj = 6;
  cfg.hidden = 8;
  cfg.n_answers = 5;
  cfg.max_q_len = 6;
  return cfg;
}

}  // namespace

TEST_CASE("an object the model ignores has exactly zero sensitivity") {
  // P depends on object 0 only.
  auto f = [](const Tensor& v) { return reshape(sigmoid(sum(row(v, 0))), {1}); };
  Tensor v = Tensor::from_data({3, 4}, std::vector<double>(12, 0.25));
  Tensor s = sensitivity_row(f, v, 0);
  CHECK(s.at(1) == 0.0);
  CHECK(s.at(2) == 0.0);
  CHECK(s.at(0) != 0.0);
}

TEST_CASE("linear-sigmoid probe matches the closed form to 1e-12") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 5;
    std::vector<double> wv(d);
    for (auto& x : wv) x = dist(rng);
    const double b = dist(rng);
    Tensor w = Tensor::from_data({d}, wv);
    auto f = [&](const Tensor& v) { return sigmoid(add_scalar(dot(row(v, 0), w), b)); };

    Tensor v = random_matrix(rng, 2, d);
    double z = b, wsum = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      z += wv[k] * v.at(0, k);
      wsum += wv[k];
    }
    const double sig = 1.0 / (1.0 + std::exp(-z));
    const double want = sig * (1.0 - sig) * wsum;

    Tensor s = sensitivity(f, v, 0, 0);
    CHECK(std::abs(s.value() - want) <= 1e-12);
    Tensor other = sensitivity(f, v, 0, 1);
    CHECK(other.value() == 0.0);
  }
}

TEST_CASE("sensitivity can be negative once relu is off the gradient") {
  Tensor w = Tensor::from_data({3}, {-2.0, -1.5, -0.5});
  auto f = [&](const Tensor& v) { return sigmoid(reshape(dot(row(v, 0), w), {1})); };
  Tensor v = Tensor::from_data({2, 3}, {0.1, 0.2, 0.3, 0.0, 0.0, 0.0});
  Tensor s = sensitivity(f, v, 0, 0);
  CHECK(s.value() < 0.0);

  // The original attribution (relu of gradient, weighted by the features)
  // clamps the same case to zero; kept here as a contrast oracle only.
  Tensor vg = Tensor::from_data(v.shape(), v.data(), true);
  Tensor g = grad(slice(f(vg), 0, 1), {vg})[0];
  Tensor gradcam = sum(relu(mul(row(g, 0), row(vg, 0))));
  CHECK(gradcam.value() == 0.0);
}

TEST_CASE("sensitivity matches the directional finite difference on a qa model") {
  QaModel model(tiny_qa(), 77);
  std::mt19937_64 rng(78);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor v = random_matrix(rng, 4, 6);
    Tensor q = model.encode_question({1, 5, 3});
    auto f = [&](const Tensor& vv) { return model.predict(vv, q); };
    std::uniform_int_distribution<std::size_t> pick_a(0, 4), pick_i(0, 3);
    const std::size_t a = pick_a(rng), i = pick_i(rng);

    Tensor s = sensitivity(f, v, a, i);

    const double h = 1e-5;
    auto eval_shifted = [&](double delta) {
      NoGradGuard ng;
      std::vector<double> data(v.data());
      for (std::size_t k = 0; k < 6; ++k) data[i * 6 + k] += delta;
      Tensor shifted = Tensor::from_data({4, 6}, std::move(data));
      return model.predict(shifted, q).at(a);
    };
    const double want = (eval_shifted(h) - eval_shifted(-h)) / (2.0 * h);
    CHECK(s.value() == doctest::Approx(want).epsilon(1e-5));
  }
}

TEST_CASE("sensitivity matrix agrees with per-entry sensitivities") {
  QaModel model(tiny_qa(), 5);
  std::mt19937_64 rng(6);
  Tensor v = random_matrix(rng, 3, 6);
  Tensor q = model.encode_question({2, 4});
  auto f = [&](const Tensor& vv) { return model.predict(vv, q); };
  Tensor m = sensitivity_matrix(f, v, 5);
  REQUIRE(m.shape() == std::vector<std::size_t>{5, 3});
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(m.at(a, i) == doctest::Approx(sensitivity(f, v, a, i).value()).epsilon(1e-12));
    }
  }
}

TEST_CASE("violation arithmetic") {
  auto sv = [](double si, double sj) {
    return sensitivity_violation(Tensor::scalar(si), Tensor::scalar(sj)).value();
  };
  CHECK(sv(0.5, 0.5) == 0.0);
  CHECK(sv(0.3, 0.5) == doctest::Approx(0.2));
  CHECK(sv(0.5, 0.3) == 0.0);

  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = dist(rng), b = dist(rng);
    const double ab = sv(a, b), ba = sv(b, a);
    CHECK(ab >= 0.0);
    CHECK((ab == 0.0 || ba == 0.0));
  }
}

TEST_CASE("most influential object fixtures") {
  std::vector<double> s{0.9, 0.1, 0.5, 0.2};
  CHECK(most_influential(s, {0, 1}) == 0);
  CHECK(most_influential(s, {1}) == 1);  // singleton, regardless of values
  CHECK(most_influential(s, {3}) == 3);
  CHECK_THROWS(most_influential(s, {}));
  CHECK_THROWS(most_influential(s, {0, 1, 2, 3}));
  CHECK_THROWS(most_influential(s, {0, 0}));
  CHECK_THROWS(most_influential(s, {9}));
}

TEST_CASE("most influential matches brute force on 1000 random rows") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    std::uniform_int_distribution<std::size_t> nd(3, 8);
    const std::size_t n = nd(rng);
    std::vector<double> s(n);
    for (auto& x : s) x = dist(rng);
    std::uniform_int_distribution<std::size_t> kd(1, n - 1);
    const std::size_t k = kd(rng);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<std::size_t> proposal(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));

    CHECK(most_influential(s, proposal) == brute_force_most_influential(s, proposal));
  }
}

TEST_CASE("a dominant proposal object is always selected") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> s(6);
    for (auto& x : s) x = dist(rng);
    std::size_t top = 0;
    for (std::size_t i = 1; i < 6; ++i) {
      if (s[i] > s[top]) top = i;
    }
    s[top] += 1.0;  // make the max unique and clearly dominant
    const std::size_t other = top == 0 ? 1 : 0;
    s[other] = *std::min_element(s.begin(), s.end()) - 1.0;  // violated by every outsider
    CHECK(most_influential(s, {top, other}) == top);
    CHECK(most_influential(s, {other, top}) == top);
  }

  // Two proposal objects that both dominate the outside tie at zero
  // violations; the lower index wins.
  CHECK(most_influential({0.2, 0.9, 0.8, 0.1}, {1, 2}) == 1);
  CHECK(most_influential({0.9, 0.2, 0.8, 0.1}, {0, 2}) == 0);
}

TEST_CASE("sensitivities stay differentiable with create_graph") {
  // S(w) = sigma'(w.v + b) * sum(w); check dS/dw against finite differences
  // of the closed form.
  const std::vector<double> v0{0.3, -0.2, 0.5};
  const double b = 0.1;
  Tensor w = Tensor::from_data({3}, {0.4, -0.7, 0.2}, true);
  Tensor v = Tensor::from_data({2, 3}, {0.3, -0.2, 0.5, 0, 0, 0});
  auto f = [&](const Tensor& vv) { return sigmoid(add_scalar(dot(row(vv, 0), w), b)); };

  Tensor s = sensitivity(f, v, 0, 0, /*create_graph=*/true);
  auto ds = grad(s, {w});

  auto closed = [&](const std::vector<double>& wv) {
    double z = b, wsum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      z += wv[k] * v0[k];
      wsum += wv[k];
    }
    const double sig = 1.0 / (1.0 + std::exp(-z));
    return sig * (1.0 - sig) * wsum;
  };
  const double h = 1e-6;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> hi(w.data()), lo(w.data());
    hi[k] += h;
    lo[k] -= h;
    const double want = (closed(hi) - closed(lo)) / (2.0 * h);
    CHECK(ds[0].at(k) == doctest::Approx(want).epsilon(1e-5));
  }
}

TEST_CASE("report selects v* from the proposal and serializes") {
  QaModel model(tiny_qa(), 91);
  std::mt19937_64 rng(92);
  Tensor v = random_matrix(rng, 4, 6);
  Tensor q = model.encode_question({3, 1});
  auto f = [&](const Tensor& vv) { return model.predict(vv, q); };
  std::vector<std::size_t> proposal{1, 3};
  auto rep = make_report(f, v, 5, 2, proposal);
  CHECK((rep.v_star == 1 || rep.v_star == 3));
  for (std::size_t i = 0; i < rep.s.numel(); ++i) CHECK(std::isfinite(rep.s.at(i)));

  const std::string js = rep.to_json();
  CHECK(js.find("\"v_star\"") != std::string::npos);
  CHECK(js.find("\"sensitivities\"") != std::string::npos);
  CHECK(js.find("\"proposal\"") != std::string::npos);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "scr/autodiff/grad.hpp"
#include "scr/autodiff/ops.hpp"
#include "scr/gradcheck.hpp"
#include "scr/models/checkpoint.hpp"
#include "scr/models/mlp.hpp"
#include "scr/models/qa_instance.hpp"
#include "scr/models/qa_model.hpp"

using namespace scr::autodiff;
using namespace scr::models;
using scr::finite_difference;
using scr::max_rel_err;

namespace {

QaConfig tiny_qa() {
  QaConfig cfg;
  cfg.vocab = 10;
  cfg.d_word = 4;
  cfg.d_obj = 5;
  cfg.hidden = 6;
  cfg.n_answers = 4;
  cfg.max_q_len = 5;
  return cfg;
}

Tensor random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> data(r * c);
  for (auto& v : data) v = dist(rng);
  return Tensor::from_data({r, c}, std::move(data));
}

std::string temp_path(const char* stem) {
  return std::string("./") + stem + ".ckpt.tmp";
}

}  // namespace

TEST_CASE("mlp outputs one sigmoid confidence per class") {
  MlpClassifier mlp({2, 8, 3, 2}, 11);
  std::mt19937_64 rng(3);
  Tensor x = random_matrix(rng, 5, 2);
  Tensor p = mlp.forward(x);
  CHECK(p.shape() == std::vector<std::size_t>{5, 2});
  for (std::size_t i = 0; i < p.numel(); ++i) {
    CHECK(p.at(i) > 0.0);
    CHECK(p.at(i) < 1.0);
  }
  CHECK_THROWS(mlp.forward(random_matrix(rng, 5, 3)));
}

TEST_CASE("mlp construction is seeded and deterministic") {
  MlpClassifier a({2, 4, 3, 2}, 99);
  MlpClassifier b({2, 4, 3, 2}, 99);
  MlpClassifier c({2, 4, 3, 2}, 100);
  auto pa = a.params(), pb = b.params(), pc = c.params();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].tensor.data() == pb[i].tensor.data());
    if (pa[i].tensor.data() != pc[i].tensor.data()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("mlp gradients match finite differences") {
  MlpClassifier mlp({2, 4, 3, 2}, 5);
  auto params = mlp.params();
  std::mt19937_64 rng(8);
  Tensor x = random_matrix(rng, 4, 2);
  x.set_requires_grad(true);

  auto build = [&](const std::vector<Tensor>&) { return sum(mlp.forward(x)); };
  Tensor out = build({});
  std::vector<Tensor> wrt{x};
  for (auto& p : params) wrt.push_back(p.tensor);
  auto gots = grad(out, wrt);
  auto eval = [&](const std::vector<Tensor>&) { return sum(mlp.forward(x)).value(); };
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    auto want = finite_difference(eval, {wrt[k]}, 0);
    CHECK(max_rel_err(gots[k].data(), want) < 1e-6);
  }
}

TEST_CASE("gru with zero weights is a fixed point at zero") {
  QaModel model(tiny_qa(), 1);
  for (auto& p : model.params()) {
    if (p.name.rfind("gru.", 0) == 0) {
      for (auto& v : p.tensor.mutable_data()) v = 0.0;
    }
  }
  for (auto tokens : {std::vector<std::size_t>{3}, std::vector<std::size_t>{1, 2, 3}}) {
    Tensor q = model.encode_question(tokens);
    for (std::size_t i = 0; i < q.numel(); ++i) CHECK(q.at(i) == 0.0);
  }
}

TEST_CASE("question encoding is order sensitive") {
  QaModel model(tiny_qa(), 7);
  Tensor a = model.encode_question({1, 2, 3});
  Tensor b = model.encode_question({3, 2, 1});
  double diff = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) diff += std::abs(a.at(i) - b.at(i));
  CHECK(diff > 1e-6);
}

TEST_CASE("question encoder rejects bad sequences") {
  QaModel model(tiny_qa(), 7);
  CHECK_THROWS(model.encode_question({}));
  CHECK_THROWS(model.encode_question({1, 2, 3, 4, 5, 6}));
  CHECK_THROWS(model.encode_question({10}));
}

TEST_CASE("question encoder gradient w.r.t. the embedding table") {
  QaModel model(tiny_qa(), 13);
  auto params = model.params();
  Tensor emb = params[0].tensor;
  REQUIRE(params[0].name == "emb");
  std::vector<std::size_t> tokens{2, 5, 2, 7};

  Tensor out = sum(model.encode_question(tokens));
  auto got = grad(out, {emb});
  auto eval = [&](const std::vector<Tensor>&) { return sum(model.encode_question(tokens)).value(); };
  auto want = finite_difference(eval, {emb}, 0);
  CHECK(max_rel_err(got[0].data(), want) < 1e-5);
}

TEST_CASE("zero answer head gives 0.5 confidence everywhere") {
  QaModel model(tiny_qa(), 3);
  for (auto& p : model.params()) {
    if (p.name.rfind("head.", 0) == 0) {
      for (auto& v : p.tensor.mutable_data()) v = 0.0;
    }
  }
  std::mt19937_64 rng(4);
  Tensor v = random_matrix(rng, 3, 5);
  Tensor q = model.encode_question({1, 2});
  Tensor p = model.predict(v, q);
  REQUIRE(p.numel() == 4);
  for (std::size_t i = 0; i < p.numel(); ++i) CHECK(p.at(i) == doctest::Approx(0.5));
}

TEST_CASE("a zero-attention duplicate object does not change the prediction") {
  QaModel model(tiny_qa(), 21);
  std::mt19937_64 rng(9);
  Tensor v = random_matrix(rng, 3, 5);
  Tensor q = model.encode_question({4, 1, 6});
  Tensor base = model.predict(v, q);

  std::vector<double> dup(v.data());
  dup.insert(dup.end(), v.data().begin() + 5, v.data().begin() + 10);  // copy object 1
  Tensor v2 = Tensor::from_data({4, 5}, std::move(dup));
  Tensor masked = model.predict(v2, q, Tensor::from_data({4}, {1, 1, 1, 0}));
  for (std::size_t i = 0; i < base.numel(); ++i) {
    CHECK(masked.at(i) == doctest::Approx(base.at(i)).epsilon(1e-12));
  }
}

TEST_CASE("prediction gradients w.r.t. object features match finite differences") {
  QaModel model(tiny_qa(), 17);
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor v = random_matrix(rng, 4, 5);
    v.set_requires_grad(true);
    Tensor q = model.encode_question({1, 8, 3});
    for (std::size_t a = 0; a < 4; ++a) {
      Tensor pa = slice(model.predict(v, q), a, 1);
      auto got = grad(pa, {v});
      auto eval = [&](const std::vector<Tensor>&) {
        return slice(model.predict(v, q), a, 1).value();
      };
      auto want = finite_difference(eval, {v}, 0);
      CHECK(max_rel_err(got[0].data(), want) < 1e-5);
    }
  }
}

TEST_CASE("predict rejects malformed inputs") {
  QaModel model(tiny_qa(), 2);
  std::mt19937_64 rng(5);
  Tensor q = model.encode_question({1});
  CHECK_THROWS(model.predict(Tensor::zeros({0, 5}), q));
  CHECK_THROWS(model.predict(random_matrix(rng, 3, 4), q));
  CHECK_THROWS(model.predict(random_matrix(rng, 3, 5), Tensor::zeros({5})));
  CHECK_THROWS(model.predict(random_matrix(rng, 3, 5), q, Tensor::zeros({3})));
}

TEST_CASE("instance validation") {
  QaInstance inst;
  inst.v = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  inst.gold = {0.0, 1.0, 0.3};
  inst.a_gt = 1;
  CHECK_NOTHROW(validate_instance(inst));

  inst.a_gt = 2;  // not the top gold score
  CHECK_THROWS(validate_instance(inst));
  inst.a_gt = 1;
  inst.v = Tensor::from_data({1, 3}, {1, 2, 3});
  CHECK_THROWS(validate_instance(inst));
  inst.v = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  inst.gold = {0.0, 1.2, 0.3};
  CHECK_THROWS(validate_instance(inst));
}

TEST_CASE("checkpoints round-trip bitwise") {
  QaModel a(tiny_qa(), 31);
  QaModel b(tiny_qa(), 32);
  const std::string path = temp_path("qa_roundtrip");
  auto pa = a.params();
  save_checkpoint(path, pa);
  auto pb = b.params();
  load_checkpoint(path, pb);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].tensor.data() == pb[i].tensor.data());
  }
  std::mt19937_64 rng(6);
  Tensor v = random_matrix(rng, 3, 5);
  Tensor qa_ = a.encode_question({1, 2, 3});
  Tensor qb = b.encode_question({1, 2, 3});
  CHECK(a.predict(v, qa_).data() == b.predict(v, qb).data());

  auto dump = read_checkpoint(path);
  CHECK(dump.size() == pa.size());
  CHECK(dump.count("emb") == 1);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loading is strict about names and shapes") {
  MlpClassifier mlp({2, 4, 3, 2}, 1);
  const std::string path = temp_path("mlp_strict");
  auto params = mlp.params();
  save_checkpoint(path, params);

  MlpClassifier other({2, 5, 3, 2}, 1);
  auto op = other.params();
  CHECK_THROWS(load_checkpoint(path, op));

  QaModel qa(tiny_qa(), 1);
  auto qp = qa.params();
  CHECK_THROWS(load_checkpoint(path, qp));

  CHECK_THROWS(read_checkpoint("./no_such_file.ckpt"));
  std::remove(path.c_str());
}

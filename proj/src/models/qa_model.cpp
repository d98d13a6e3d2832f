#include "scr/models/qa_model.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

#include "scr/autodiff/ops.hpp"
#include "scr/models/init.hpp"

namespace scr::models {

using namespace autodiff;

QaModel::QaModel(QaConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.vocab < 1 || cfg_.d_word < 1 || cfg_.d_obj < 1 || cfg_.hidden < 1 ||
      cfg_.n_answers < 2 || cfg_.max_q_len < 1 || cfg_.unk_id >= cfg_.vocab) {
    throw std::runtime_error("qa_model: invalid configuration");
  }
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg_.d_word, h = cfg_.hidden;
  emb_ = uniform_fan_in(rng, {cfg_.vocab, d}, d);
  wz_ = uniform_fan_in(rng, {d, h}, d);
  uz_ = uniform_fan_in(rng, {h, h}, h);
  bz_ = uniform_fan_in(rng, {h}, d);
  wr_ = uniform_fan_in(rng, {d, h}, d);
  ur_ = uniform_fan_in(rng, {h, h}, h);
  br_ = uniform_fan_in(rng, {h}, d);
  wh_ = uniform_fan_in(rng, {d, h}, d);
  uh_ = uniform_fan_in(rng, {h, h}, h);
  bh_ = uniform_fan_in(rng, {h}, d);
  wv_ = uniform_fan_in(rng, {cfg_.d_obj, h}, cfg_.d_obj);
  bv_ = uniform_fan_in(rng, {h}, cfg_.d_obj);
  wq_ = uniform_fan_in(rng, {h, h}, h);
  bq_ = uniform_fan_in(rng, {h}, h);
  wa_ = uniform_fan_in(rng, {h}, h);
  wo_ = uniform_fan_in(rng, {h, cfg_.n_answers}, h);
  wu_ = uniform_fan_in(rng, {cfg_.d_obj, cfg_.n_answers}, cfg_.d_obj);
  bo_ = uniform_fan_in(rng, {cfg_.n_answers}, h);
}

Tensor QaModel::encode_question(const std::vector<std::size_t>& tokens) const {
  if (tokens.empty()) throw std::runtime_error("encode_question: empty token sequence");
  if (tokens.size() > cfg_.max_q_len) {
    throw std::runtime_error("encode_question: sequence length " + std::to_string(tokens.size()) +
                             " exceeds maximum " + std::to_string(cfg_.max_q_len));
  }
  for (std::size_t t : tokens) {
    if (t >= cfg_.vocab) {
      throw std::runtime_error("encode_question: token id " + std::to_string(t) +
                               " outside the vocabulary");
    }
  }
  const std::size_t h = cfg_.hidden;
  // One-hot rows keep the lookup differentiable with respect to the table.
  std::vector<double> oh(tokens.size() * cfg_.vocab, 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) oh[i * cfg_.vocab + tokens[i]] = 1.0;
  Tensor e = matmul(Tensor::from_data({tokens.size(), cfg_.vocab}, std::move(oh)), emb_);

  Tensor hs = Tensor::zeros({1, h});
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    Tensor x = reshape(row(e, t), {1, cfg_.d_word});
    Tensor z = sigmoid(add(add(matmul(x, wz_), matmul(hs, uz_)), reshape(bz_, {1, h})));
    Tensor r = sigmoid(add(add(matmul(x, wr_), matmul(hs, ur_)), reshape(br_, {1, h})));
    Tensor c = tanh(add(add(matmul(x, wh_), matmul(mul(r, hs), uh_)), reshape(bh_, {1, h})));
    hs = add(mul(sub(Tensor::scalar(1.0), z), hs), mul(z, c));
  }
  return reshape(hs, {h});
}

Tensor QaModel::predict(const Tensor& v, const Tensor& q) const {
  return predict(v, q, Tensor::full({v.is_matrix() ? v.rows() : 0}, 1.0));
}

Tensor QaModel::predict(const Tensor& v, const Tensor& q, const Tensor& mask) const {
  if (!v.is_matrix() || v.rows() == 0 || v.cols() != cfg_.d_obj) {
    throw std::runtime_error("predict: expected a non-empty [n x " + std::to_string(cfg_.d_obj) +
                             "] object matrix, got " + shape_str(v.shape()));
  }
  if (q.numel() != cfg_.hidden) {
    throw std::runtime_error("predict: question vector has " + std::to_string(q.numel()) +
                             " entries, expected " + std::to_string(cfg_.hidden));
  }
  const std::size_t n = v.rows(), h = cfg_.hidden;
  if (mask.shape() != std::vector<std::size_t>{n}) {
    throw std::runtime_error("predict: attention mask shape " + shape_str(mask.shape()) +
                             " does not cover " + std::to_string(n) + " objects");
  }

  Tensor vp = tanh(add(matmul(v, wv_), repeat_rows(bv_, n)));
  Tensor qp = tanh(add(matmul(reshape(q, {1, h}), wq_), reshape(bq_, {1, h})));
  Tensor joint = mul(vp, repeat_rows(reshape(qp, {h}), n));

  Tensor scores = reshape(matmul(joint, reshape(wa_, {h, 1})), {n});
  // Constant shift by the masked max; softmax is shift-invariant so this is
  // exact and keeps exp in range.
  double mx = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.at(i) > 0.0 && (!any || scores.at(i) > mx)) {
      mx = scores.at(i);
      any = true;
    }
  }
  if (!any) throw std::runtime_error("predict: attention mask excludes every object");
  Tensor ex = mul(exp(add_scalar(scores, -mx)), mask);
  Tensor att = div(ex, sum(ex));

  Tensor pooled = matmul(reshape(att, {1, n}), joint);
  Tensor pooled_v = matmul(reshape(att, {1, n}), v);
  Tensor logits = add(add(matmul(pooled, wo_), matmul(pooled_v, wu_)),
                      reshape(bo_, {1, cfg_.n_answers}));
  return reshape(sigmoid(logits), {cfg_.n_answers});
}

std::vector<Adam::Param> QaModel::params() {
  return {{emb_, "emb"},      {wz_, "gru.wz"},  {uz_, "gru.uz"},  {bz_, "gru.bz"},
          {wr_, "gru.wr"},    {ur_, "gru.ur"},  {br_, "gru.br"},  {wh_, "gru.wh"},
          {uh_, "gru.uh"},    {bh_, "gru.bh"},  {wv_, "fuse.wv"}, {bv_, "fuse.bv"},
          {wq_, "fuse.wq"},   {bq_, "fuse.bq"}, {wa_, "att.w"},   {wo_, "head.w"},
          {wu_, "head.u"},    {bo_, "head.b"}};
}

}  // namespace scr::models

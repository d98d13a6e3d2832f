#include "scr/autodiff/ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace scr::autodiff {

namespace {

using MatMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutMatMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_finite(const char* op, const std::vector<double>& data) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(op) + ": produced a non-finite value");
    }
  }
}

Tensor make_op(const char* op, std::vector<std::size_t> shape, std::vector<double> data,
               std::vector<Tensor> inputs, VjpFn vjp) {
  check_finite(op, data);
  bool record = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        record = true;
        break;
      }
    }
  }
  std::shared_ptr<Node> node;
  if (record) {
    node = std::make_shared<Node>();
    node->op = op;
    node->inputs = std::move(inputs);
    node->vjp = std::move(vjp);
  }
  return make_tensor(std::move(shape), std::make_shared<std::vector<double>>(std::move(data)),
                     record, std::move(node));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::runtime_error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                           shape_str(b.shape()));
}

// Allowed pairs: identical shapes, or either side scalar.
std::vector<std::size_t> binary_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return a.shape();
  if (a.is_scalar()) return b.shape();
  if (b.is_scalar()) return a.shape();
  shape_error(op, a, b);
}

double broadcast_at(const Tensor& t, std::size_t i) {
  return t.is_scalar() ? t.data()[0] : t.data()[i];
}

// Adjoint of a scalar operand in a broadcast op is the sum of the
// elementwise adjoint.
Tensor reduce_to(const Tensor& g, const Tensor& operand) {
  if (g.shape() == operand.shape()) return g;
  return reshape(sum(g), operand.shape());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  auto shape = binary_shape("add", a, b);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = broadcast_at(a, i) + broadcast_at(b, i);
  return make_op("add", std::move(shape), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   return {in[0].requires_grad() ? reduce_to(g, in[0]) : Tensor(),
                           in[1].requires_grad() ? reduce_to(g, in[1]) : Tensor()};
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  auto shape = binary_shape("sub", a, b);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = broadcast_at(a, i) - broadcast_at(b, i);
  return make_op("sub", std::move(shape), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   return {in[0].requires_grad() ? reduce_to(g, in[0]) : Tensor(),
                           in[1].requires_grad() ? reduce_to(neg(g), in[1]) : Tensor()};
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  auto shape = binary_shape("mul", a, b);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = broadcast_at(a, i) * broadcast_at(b, i);
  return make_op("mul", std::move(shape), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   return {in[0].requires_grad() ? reduce_to(mul(g, in[1]), in[0]) : Tensor(),
                           in[1].requires_grad() ? reduce_to(mul(g, in[0]), in[1]) : Tensor()};
                 });
}

Tensor div(const Tensor& a, const Tensor& b) {
  auto shape = binary_shape("div", a, b);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = broadcast_at(a, i) / broadcast_at(b, i);
  return make_op("div", std::move(shape), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   Tensor ga, gb;
                   if (in[0].requires_grad()) ga = reduce_to(div(g, in[1]), in[0]);
                   if (in[1].requires_grad()) {
                     gb = reduce_to(neg(div(mul(g, in[0]), mul(in[1], in[1]))), in[1]);
                   }
                   return {ga, gb};
                 });
}

Tensor neg(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& v : out) v = -v;
  return make_op("neg", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {neg(g)};
                 });
}

Tensor mul_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.data());
  for (double& v : out) v *= c;
  return make_op("mul_scalar", a.shape(), std::move(out), {a},
                 [c](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {mul_scalar(g, c)};
                 });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.data());
  for (double& v : out) v += c;
  return make_op("add_scalar", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {g};
                 });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& v : out) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return make_op("sigmoid", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   // Recomputed from the input so the rule stays differentiable.
                   Tensor y = sigmoid(in[0]);
                   return {mul(g, mul(y, sub(Tensor::scalar(1.0), y)))};
                 });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& v : out) v = std::tanh(v);
  return make_op("tanh", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   Tensor y = tanh(in[0]);
                   return {mul(g, sub(Tensor::scalar(1.0), mul(y, y)))};
                 });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return make_op("relu", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   std::vector<double> mask(in[0].data());
                   for (double& v : mask) v = v > 0.0 ? 1.0 : 0.0;
                   return {mul(g, Tensor::from_data(in[0].shape(), std::move(mask)))};
                 });
}

Tensor exp(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& v : out) v = std::exp(v);
  return make_op("exp", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   return {mul(g, exp(in[0]))};
                 });
}

Tensor log(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& v : out) v = std::log(v);
  return make_op("log", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   return {div(g, in[0])};
                 });
}

Tensor clamp_min(const Tensor& a, double lo) {
  std::vector<double> out(a.data());
  for (double& v : out) v = v < lo ? lo : v;
  return make_op("clamp_min", a.shape(), std::move(out), {a},
                 [lo](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   std::vector<double> mask(in[0].data());
                   for (double& v : mask) v = v > lo ? 1.0 : 0.0;
                   return {mul(g, Tensor::from_data(in[0].shape(), std::move(mask)))};
                 });
}

Tensor clamp_max(const Tensor& a, double hi) {
  std::vector<double> out(a.data());
  for (double& v : out) v = v > hi ? hi : v;
  return make_op("clamp_max", a.shape(), std::move(out), {a},
                 [hi](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   std::vector<double> mask(in[0].data());
                   for (double& v : mask) v = v < hi ? 1.0 : 0.0;
                   return {mul(g, Tensor::from_data(in[0].shape(), std::move(mask)))};
                 });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (!a.is_matrix() || !b.is_matrix() || a.cols() != b.rows()) {
    shape_error("matmul", a, b);
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  {
    MatMap ma(a.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    MatMap mb(b.data().data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    MutMatMap mo(out.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    mo.noalias() = ma * mb;
  }
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   Tensor ga, gb;
                   if (in[0].requires_grad()) ga = matmul(g, transpose(in[1]));
                   if (in[1].requires_grad()) gb = matmul(transpose(in[0]), g);
                   return {ga, gb};
                 });
}

Tensor transpose(const Tensor& a) {
  if (!a.is_matrix()) {
    throw std::runtime_error("transpose: expected a matrix, got " + shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[c * m + r] = a.data()[r * n + c];
  }
  return make_op("transpose", {n, m}, std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {transpose(g)};
                 });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_op("sum", {1}, {s}, {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   return {expand_scalar(g, in[0].shape())};
                 });
}

Tensor mean(const Tensor& a) { return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum_axis(const Tensor& a, int axis) {
  if (!a.is_matrix() || (axis != 0 && axis != 1)) {
    throw std::runtime_error("sum_axis: expected a matrix and axis 0/1, got " +
                             shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  if (axis == 0) {
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < n; ++c) out[c] += a.data()[r * n + c];
    }
    return make_op("sum_axis0", {n}, std::move(out), {a},
                   [m](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                     return {repeat_rows(g, m)};
                   });
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r] += a.data()[r * n + c];
  }
  return make_op("sum_axis1", {m}, std::move(out), {a},
                 [n](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {repeat_cols(g, n)};
                 });
}

Tensor max_axis(const Tensor& a, int axis) {
  if (!a.is_matrix() || (axis != 0 && axis != 1)) {
    throw std::runtime_error("max_axis: expected a matrix and axis 0/1, got " +
                             shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  const auto arg = argmax_axis(a, axis);
  const std::size_t out_n = axis == 0 ? n : m;
  std::vector<double> out(out_n);
  for (std::size_t i = 0; i < out_n; ++i) {
    out[i] = axis == 0 ? a.at(arg[i], i) : a.at(i, arg[i]);
  }
  return make_op("max_axis", {out_n}, std::move(out), {a},
                 [axis, arg](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   const std::size_t rows = in[0].rows(), cols = in[0].cols();
                   std::vector<double> mask(rows * cols, 0.0);
                   if (axis == 0) {
                     for (std::size_t c = 0; c < cols; ++c) mask[arg[c] * cols + c] = 1.0;
                   } else {
                     for (std::size_t r = 0; r < rows; ++r) mask[r * cols + arg[r]] = 1.0;
                   }
                   Tensor expanded = axis == 0 ? repeat_rows(g, rows) : repeat_cols(g, cols);
                   return {mul(expanded, Tensor::from_data({rows, cols}, std::move(mask)))};
                 });
}

Tensor expand_scalar(const Tensor& s, std::vector<std::size_t> shape) {
  if (!s.is_scalar()) {
    throw std::runtime_error("expand_scalar: expected a scalar, got " + shape_str(s.shape()));
  }
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> out(n, s.data()[0]);
  return make_op("expand_scalar", std::move(shape), std::move(out), {s},
                 [](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   return {reshape(sum(g), in[0].shape())};
                 });
}

Tensor repeat_rows(const Tensor& v, std::size_t rows) {
  if (v.rank() != 1) {
    throw std::runtime_error("repeat_rows: expected rank-1, got " + shape_str(v.shape()));
  }
  const std::size_t n = v.numel();
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = v.data()[c];
  }
  return make_op("repeat_rows", {rows, n}, std::move(out), {v},
                 [](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {sum_axis(g, 0)};
                 });
}

Tensor repeat_cols(const Tensor& v, std::size_t cols) {
  if (v.rank() != 1) {
    throw std::runtime_error("repeat_cols: expected rank-1, got " + shape_str(v.shape()));
  }
  const std::size_t m = v.numel();
  std::vector<double> out(m * cols);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = v.data()[r];
  }
  return make_op("repeat_cols", {m, cols}, std::move(out), {v},
                 [](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {sum_axis(g, 1)};
                 });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::runtime_error("concat: no parts");
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rank() != 1) {
      throw std::runtime_error("concat: expected rank-1 parts, got " + shape_str(p.shape()));
    }
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  const std::size_t total = out.size();
  return make_op("concat", {total}, std::move(out), parts,
                 [offsets, total](const Tensor& g,
                                  const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   std::vector<Tensor> grads(in.size());
                   for (std::size_t k = 0; k < in.size(); ++k) {
                     if (!in[k].requires_grad()) continue;
                     const std::size_t len =
                         (k + 1 < offsets.size() ? offsets[k + 1] : total) - offsets[k];
                     grads[k] = slice(g, offsets[k], len);
                   }
                   return grads;
                 });
}

Tensor slice(const Tensor& a, std::size_t start, std::size_t len) {
  if (a.rank() != 1) {
    throw std::runtime_error("slice: expected rank-1, got " + shape_str(a.shape()));
  }
  if (start + len > a.numel() || len == 0) {
    throw std::runtime_error("slice: range [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") out of bounds for " +
                             shape_str(a.shape()));
  }
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(start),
                          a.data().begin() + static_cast<std::ptrdiff_t>(start + len));
  return make_op("slice", {len}, std::move(out), {a},
                 [start, len](const Tensor& g, const std::vector<Tensor>& in) -> std::vector<Tensor> {
                   const std::size_t n = in[0].numel();
                   std::vector<Tensor> parts;
                   if (start > 0) parts.push_back(Tensor::zeros({start}));
                   parts.push_back(g);
                   if (start + len < n) parts.push_back(Tensor::zeros({n - start - len}));
                   return {parts.size() == 1 ? g : concat(parts)};
                 });
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != a.numel()) {
    throw std::runtime_error("reshape: cannot view " + shape_str(a.shape()) + " as " +
                             shape_str(shape));
  }
  std::vector<double> out(a.data());
  auto orig = a.shape();
  return make_op("reshape", std::move(shape), std::move(out), {a},
                 [orig](const Tensor& g, const std::vector<Tensor>&) -> std::vector<Tensor> {
                   return {reshape(g, orig)};
                 });
}

Tensor row(const Tensor& m, std::size_t r) {
  if (!m.is_matrix()) throw std::runtime_error("row: expected a matrix");
  const std::size_t n = m.cols();
  return slice(reshape(m, {m.numel()}), r * n, n);
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1 || a.numel() != b.numel()) shape_error("dot", a, b);
  return sum(mul(a, b));
}

std::vector<std::size_t> argmax_axis(const Tensor& a, int axis) {
  if (!a.is_matrix() || (axis != 0 && axis != 1)) {
    throw std::runtime_error("argmax_axis: expected a matrix and axis 0/1");
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<std::size_t> arg(axis == 0 ? n : m, 0);
  if (axis == 0) {
    for (std::size_t c = 0; c < n; ++c) {
      double best = a.at(0, c);
      for (std::size_t r = 1; r < m; ++r) {
        if (a.at(r, c) > best) {
          best = a.at(r, c);
          arg[c] = r;
        }
      }
    }
  } else {
    for (std::size_t r = 0; r < m; ++r) {
      double best = a.at(r, 0);
      for (std::size_t c = 1; c < n; ++c) {
        if (a.at(r, c) > best) {
          best = a.at(r, c);
          arg[r] = c;
        }
      }
    }
  }
  return arg;
}

std::size_t argmax(const std::vector<double>& v) {
  if (v.empty()) throw std::runtime_error("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace scr::autodiff

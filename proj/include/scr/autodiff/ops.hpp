#pragma once

#include <cstddef>
#include <vector>

#include "scr/autodiff/tensor.hpp"

namespace scr::autodiff {

// Elementwise binary ops. Shapes must match exactly, except that either
// operand may be a scalar (numel 1); no other broadcasting exists.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor mul_scalar(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// Elementwise nonlinearities.
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);  // max(x, 0); subgradient 0 at x == 0
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
// Pass-through inside the bound, derivative 0 where clamped.
Tensor clamp_min(const Tensor& a, double lo);
Tensor clamp_max(const Tensor& a, double hi);

// Matrix ops (rank-2 operands).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Reductions and their expansion inverses.
Tensor sum(const Tensor& a);                       // -> scalar [1]
Tensor sum_axis(const Tensor& a, int axis);        // rank-2 -> rank-1
Tensor mean(const Tensor& a);                      // sum / numel
Tensor max_axis(const Tensor& a, int axis);        // rank-2 -> rank-1; ties -> lowest index
Tensor expand_scalar(const Tensor& s, std::vector<std::size_t> shape);
Tensor repeat_rows(const Tensor& v, std::size_t rows);  // [n] -> [rows x n]
Tensor repeat_cols(const Tensor& v, std::size_t cols);  // [m] -> [m x cols]

// Structure ops.
Tensor concat(const std::vector<Tensor>& parts);           // rank-1 parts -> rank-1
Tensor slice(const Tensor& a, std::size_t start, std::size_t len);  // rank-1
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);

// Conveniences built from primitives.
Tensor row(const Tensor& m, std::size_t r);    // rank-2 -> rank-1
Tensor dot(const Tensor& a, const Tensor& b);  // rank-1 . rank-1 -> scalar

// Non-differentiable helpers.
std::vector<std::size_t> argmax_axis(const Tensor& a, int axis);  // ties -> lowest index
std::size_t argmax(const std::vector<double>& v);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(const Tensor& a, double c) { return mul_scalar(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return mul_scalar(a, c); }

}  // namespace scr::autodiff

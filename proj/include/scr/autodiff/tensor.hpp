#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace scr::autodiff {

class Tensor;

/// Adjoint rule of a recorded primitive: maps the output adjoint to one
/// adjoint per input. Entries for inputs that do not require grad may be
/// left as null tensors. Rules are written in terms of tape ops themselves,
/// so running them with recording enabled yields differentiable gradients.
using VjpFn =
    std::function<std::vector<Tensor>(const Tensor& grad_out, const std::vector<Tensor>& inputs)>;

/// One primitive on the tape. Inputs were created before the node, so node
/// ids give a topological order by construction.
struct Node {
  const char* op = "";
  std::uint64_t id = 0;
  std::vector<Tensor> inputs;
  VjpFn vjp;
};

struct TensorImpl {
  std::vector<std::size_t> shape;
  std::shared_ptr<std::vector<double>> data;  // row-major
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // null for leaves and constants
  std::uint64_t id = 0;
};

/// Dense 64-bit float tensor with value semantics over a shared
/// implementation. Copies are cheap handles onto the same buffer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                          bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t numel() const;
  std::size_t rank() const { return shape().size(); }
  bool is_scalar() const { return numel() == 1; }
  bool is_matrix() const { return rank() == 2; }
  std::size_t rows() const;
  std::size_t cols() const;

  /// Scalar value; throws unless numel() == 1.
  double value() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  const std::vector<double>& data() const;
  /// Mutable access, intended for leaf parameters (optimizer updates).
  std::vector<double>& mutable_data();

  bool requires_grad() const;
  void set_requires_grad(bool v);

  const std::shared_ptr<Node>& node() const;
  std::uint64_t id() const;

  TensorImpl* impl() const { return impl_.get(); }

 private:
  friend Tensor make_tensor(std::vector<std::size_t>, std::shared_ptr<std::vector<double>>, bool,
                            std::shared_ptr<Node>);
  std::shared_ptr<TensorImpl> impl_;
};

/// Internal constructor used by the op layer.
Tensor make_tensor(std::vector<std::size_t> shape, std::shared_ptr<std::vector<double>> data,
                   bool requires_grad, std::shared_ptr<Node> node);

std::uint64_t next_tensor_id();

/// Whether new ops record nodes on the tape (thread-local).
bool grad_enabled();
void set_grad_enabled(bool enabled);

/// RAII guard that disables recording in scope.
struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
  ~NoGradGuard() { set_grad_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// RAII guard that sets recording to an explicit state in scope.
struct GradModeGuard {
  explicit GradModeGuard(bool enabled) : prev_(grad_enabled()) { set_grad_enabled(enabled); }
  ~GradModeGuard() { set_grad_enabled(prev_); }
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool prev_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace scr::autodiff

#include "scr/autodiff/tensor.hpp"

#include <atomic>
#include <sstream>
#include <stdexcept>

namespace scr::autodiff {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
thread_local bool g_grad_enabled = true;
}  // namespace

std::uint64_t next_tensor_id() { return g_next_id.fetch_add(1, std::memory_order_relaxed); }

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool enabled) { g_grad_enabled = enabled; }

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}
}  // namespace

Tensor make_tensor(std::vector<std::size_t> shape, std::shared_ptr<std::vector<double>> data,
                   bool requires_grad, std::shared_ptr<Node> node) {
  if (!data || shape_numel(shape) != data->size()) {
    throw std::runtime_error("tensor: shape " + shape_str(shape) + " does not match data length");
  }
  Tensor t;
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  impl->node = std::move(node);
  impl->id = next_tensor_id();
  if (impl->node) impl->node->id = impl->id;
  t.impl_ = std::move(impl);
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  auto data = std::make_shared<std::vector<double>>(shape_numel(shape), 0.0);
  return make_tensor(std::move(shape), std::move(data), requires_grad, nullptr);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
  auto data = std::make_shared<std::vector<double>>(shape_numel(shape), value);
  return make_tensor(std::move(shape), std::move(data), requires_grad, nullptr);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
  return make_tensor(std::move(shape), std::make_shared<std::vector<double>>(std::move(data)),
                     requires_grad, nullptr);
}

const std::vector<std::size_t>& Tensor::shape() const {
  if (!impl_) throw std::runtime_error("tensor: undefined handle");
  return impl_->shape;
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::size_t Tensor::rows() const {
  if (!is_matrix()) throw std::runtime_error("tensor: rows() on non-matrix " + shape_str(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (!is_matrix()) throw std::runtime_error("tensor: cols() on non-matrix " + shape_str(shape()));
  return shape()[1];
}

double Tensor::value() const {
  if (numel() != 1) {
    throw std::runtime_error("tensor: value() requires a scalar, got " + shape_str(shape()));
  }
  return (*impl_->data)[0];
}

double Tensor::at(std::size_t i) const {
  const auto& d = data();
  if (i >= d.size()) throw std::out_of_range("tensor: index out of range");
  return d[i];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (!is_matrix()) throw std::runtime_error("tensor: at(r,c) on non-matrix");
  if (r >= rows() || c >= cols()) throw std::out_of_range("tensor: index out of range");
  return (*impl_->data)[r * cols() + c];
}

const std::vector<double>& Tensor::data() const {
  if (!impl_) throw std::runtime_error("tensor: undefined handle");
  return *impl_->data;
}

std::vector<double>& Tensor::mutable_data() {
  if (!impl_) throw std::runtime_error("tensor: undefined handle");
  return *impl_->data;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool v) {
  if (!impl_) throw std::runtime_error("tensor: undefined handle");
  if (impl_->node && !v) {
    throw std::runtime_error("tensor: cannot clear requires_grad on an op output");
  }
  impl_->requires_grad = v;
}

const std::shared_ptr<Node>& Tensor::node() const {
  static const std::shared_ptr<Node> null_node;
  return impl_ ? impl_->node : null_node;
}

std::uint64_t Tensor::id() const { return impl_ ? impl_->id : 0; }

}  // namespace scr::autodiff

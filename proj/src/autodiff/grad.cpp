#include "scr/autodiff/grad.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "scr/autodiff/ops.hpp"

namespace scr::autodiff {

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt, bool create_graph) {
  if (!output.defined()) throw std::runtime_error("grad: undefined output");
  if (output.numel() != 1) {
    throw std::runtime_error("grad: output must be scalar, got " + shape_str(output.shape()));
  }

  // Collect the ancestor subgraph. Node ids increase with creation order, so
  // descending id order is a reverse topological order.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::unordered_map<TensorImpl*, Tensor> handles;  // keeps impls alive during the walk
  std::vector<Tensor> stack{output};
  while (!stack.empty()) {
    Tensor t = stack.back();
    stack.pop_back();
    TensorImpl* p = t.impl();
    if (!p || seen.count(p)) continue;
    seen.insert(p);
    handles.emplace(p, t);
    if (t.node()) {
      order.push_back(p);
      for (const auto& in : t.node()->inputs) {
        if (in.defined() && in.requires_grad()) stack.push_back(in);
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [](TensorImpl* a, TensorImpl* b) { return a->id > b->id; });

  // A node is useful when some wrt tensor is reachable from it; adjoints of
  // the rest would be discarded, so their vjps are skipped entirely.
  std::unordered_set<TensorImpl*> useful;
  for (const auto& w : wrt) {
    if (w.defined()) useful.insert(w.impl());
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {  // ascending ids
    const Tensor& t = handles.at(*it);
    for (const auto& in : t.node()->inputs) {
      if (in.defined() && useful.count(in.impl())) {
        useful.insert(*it);
        break;
      }
    }
  }

  std::unordered_map<TensorImpl*, Tensor> adjoint;
  adjoint[output.impl()] = Tensor::full(output.shape(), 1.0);

  GradModeGuard guard(create_graph);
  for (TensorImpl* p : order) {
    if (!useful.count(p)) continue;
    auto it = adjoint.find(p);
    if (it == adjoint.end()) continue;  // no path from the output
    const Tensor g = it->second;
    const Tensor& t = handles.at(p);
    std::vector<Tensor> contribs = t.node()->vjp(g, t.node()->inputs);
    if (contribs.size() != t.node()->inputs.size()) {
      throw std::runtime_error(std::string("grad: vjp arity mismatch in op ") + t.node()->op);
    }
    for (std::size_t k = 0; k < contribs.size(); ++k) {
      const Tensor& in = t.node()->inputs[k];
      if (!contribs[k].defined() || !in.requires_grad() || !useful.count(in.impl())) continue;
      auto slot = adjoint.find(in.impl());
      if (slot == adjoint.end()) {
        adjoint.emplace(in.impl(), contribs[k]);
      } else {
        slot->second = add(slot->second, contribs[k]);
      }
    }
  }

  std::vector<Tensor> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    if (!w.defined()) throw std::runtime_error("grad: undefined wrt tensor");
    auto it = adjoint.find(w.impl());
    result.push_back(it != adjoint.end() && w.requires_grad() ? it->second
                                                              : Tensor::zeros(w.shape()));
  }
  return result;
}

}  // namespace scr::autodiff

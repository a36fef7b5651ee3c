#pragma once

// Internal node representation shared by the op implementations.

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "fastre/tensor.hpp"

FASTRE_BEGIN_NAMESPACE
namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward_fn;

  bool traced() const { return static_cast<bool>(backward_fn); }
  std::vector<Real>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), Real{0});
    return grad;
  }
};

// True when gradient mode is on and any input needs a gradient.
bool needs_trace(std::initializer_list<const Tensor*> inputs);
bool needs_trace(const std::vector<Tensor>& inputs);

Tensor make_leaf(Shape shape, std::vector<Real> data, bool requires_grad);

// Builds an op result; the trace is attached only if `traced` is true.
Tensor make_result(Shape shape, std::vector<Real> data, bool traced,
                   std::vector<std::shared_ptr<Node>> inputs,
                   std::function<void(Node&)> backward_fn);

inline bool wants_grad(const Node* n) { return n != nullptr && n->requires_grad; }

}  // namespace detail
FASTRE_END_NAMESPACE

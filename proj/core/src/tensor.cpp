#include "fastre/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "fastre/detail/autograd.hpp"
#include "fastre/errors.hpp"

FASTRE_BEGIN_NAMESPACE

namespace {
thread_local bool g_grad_enabled = true;

detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw ValidationError("use of an undefined tensor");
  return *node;
}
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace detail {

bool needs_trace(std::initializer_list<const Tensor*> inputs) {
  if (!g_grad_enabled) return false;
  for (const Tensor* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

bool needs_trace(const std::vector<Tensor>& inputs) {
  if (!g_grad_enabled) return false;
  for (const auto& t : inputs) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

Tensor make_leaf(Shape shape, std::vector<Real> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor make_result(Shape shape, std::vector<Real> data, bool traced,
                   std::vector<std::shared_ptr<Node>> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  if (traced) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return detail::make_leaf(std::move(shape), std::vector<Real>(n, Real{0}),
                           requires_grad);
}

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return detail::make_leaf(std::move(shape), std::vector<Real>(n, value),
                           requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<Real> data,
                         bool requires_grad) {
  return detail::make_leaf(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return detail::make_leaf({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(node_).data.size(); }

std::span<const Real> Tensor::data() const { return checked(node_).data; }

std::span<Real> Tensor::mutable_data() {
  auto& n = checked(node_);
  if (n.traced()) throw ValidationError("in-place write to a traced tensor");
  return n.data;
}

Real Tensor::item() const {
  const auto& n = checked(node_);
  if (n.data.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(n.shape));
  }
  return n.data[0];
}

Real Tensor::at(std::size_t i) const {
  const auto& n = checked(node_);
  if (n.shape.size() != 1 || i >= n.shape[0]) {
    throw ShapeError("at(" + std::to_string(i) + ") on shape " +
                     shape_string(n.shape));
  }
  return n.data[i];
}

Real Tensor::at(std::size_t i, std::size_t j) const {
  const auto& n = checked(node_);
  if (n.shape.size() != 2 || i >= n.shape[0] || j >= n.shape[1]) {
    throw ShapeError("at(" + std::to_string(i) + ", " + std::to_string(j) +
                     ") on shape " + shape_string(n.shape));
  }
  return n.data[i * n.shape[1] + j];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

void Tensor::set_requires_grad(bool value) {
  auto& n = checked(node_);
  if (n.traced()) throw ValidationError("requires_grad is fixed on traced tensors");
  n.requires_grad = value;
}

bool Tensor::is_leaf() const { return !checked(node_).traced(); }

std::span<const Real> Tensor::grad() const { return checked(node_).grad; }

std::span<Real> Tensor::mutable_grad() { return checked(node_).ensure_grad(); }

void Tensor::zero_grad() {
  auto& n = checked(node_);
  std::fill(n.grad.begin(), n.grad.end(), Real{0});
}

Tensor Tensor::detach() const {
  const auto& n = checked(node_);
  return detail::make_leaf(n.shape, n.data, false);
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.rank() != 0) {
    throw ShapeError("backward() requires a rank-0 loss, got " +
                     (loss.defined() ? shape_string(loss.shape()) : "undefined"));
  }
  detail::Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; reversed it is a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (node->traced()) node->grad.assign(node->data.size(), Real{0});
  }
  root->ensure_grad();
  root->grad[0] += Real{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->traced()) (*it)->backward_fn(**it);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

FASTRE_END_NAMESPACE

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
}

/// Dense row-major array with optional reverse-mode gradient tracking.
///
/// A Tensor is a handle: copies share storage and trace. Leaves are created
/// through the factory functions; every differentiable operation in ops.hpp
/// produces a tensor carrying exactly one trace entry when gradient mode is on
/// and at least one input requires a gradient.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<Real> data,
                          bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const Real> data() const;
  // Only leaves may be written in place.
  std::span<Real> mutable_data();

  Real item() const;
  Real at(std::size_t i) const;
  Real at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;
  bool has_trace() const { return !is_leaf(); }

  // Empty span until a backward pass (or mutable_grad) allocates the buffer.
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();

  // New leaf holding a copy of the values, no trace, no gradient.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Runs reverse-mode differentiation from a rank-0 tensor.
///
/// Gradients are added into the grad buffers of every reachable leaf that
/// requires a gradient; calling backward twice without zero_grad accumulates.
/// Intermediate gradients are recomputed from scratch on every call.
void backward(const Tensor& loss);

bool grad_enabled();

/// Disables trace recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

FASTRE_END_NAMESPACE

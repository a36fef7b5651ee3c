#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fastre/rng.hpp"
#include "fastre/tensor.hpp"

FASTRE_BEGIN_NAMESPACE

struct Param {
  std::string name;  // hierarchical, e.g. "encoder.block3.conv_a.kernel"
  Tensor tensor;
  bool trainable = true;
  // AdamW state, same length as the tensor.
  std::vector<Real> first_moment;
  std::vector<Real> second_moment;
  std::uint64_t step = 0;
};

/// Ordered, uniquely-named collection of model tensors. Iteration order is
/// registration order, which is also checkpoint order.
class ParamStore {
 public:
  // Throws ValidationError on duplicate names.
  Tensor& add(std::string name, Tensor tensor, bool trainable = true);

  bool contains(const std::string& name) const { return index_.contains(name); }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  Param& param(const std::string& name);

  std::span<Param> params() { return params_; }
  std::span<const Param> params() const { return params_; }
  std::vector<std::string> names() const;

  void zero_grad();

  // Trainable element count only.
  std::size_t trainable_count() const;

 private:
  std::vector<Param> params_;
  std::map<std::string, std::size_t> index_;
};

// Uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
Tensor init_fan_in(Shape shape, std::size_t fan_in, Rng& rng);
Tensor init_uniform(Shape shape, double bound, Rng& rng);

FASTRE_END_NAMESPACE

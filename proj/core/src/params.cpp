#include "fastre/params.hpp"

#include <cmath>

#include "fastre/errors.hpp"
#include "fastre/optim.hpp"

FASTRE_BEGIN_NAMESPACE

Tensor& ParamStore::add(std::string name, Tensor tensor, bool trainable) {
  if (index_.contains(name)) throw ValidationError("duplicate parameter name: " + name);
  tensor.set_requires_grad(trainable);
  index_.emplace(name, params_.size());
  Param p;
  p.name = std::move(name);
  p.trainable = trainable;
  if (trainable) {
    p.first_moment.assign(tensor.numel(), Real{0});
    p.second_moment.assign(tensor.numel(), Real{0});
  }
  p.tensor = std::move(tensor);
  params_.push_back(std::move(p));
  return params_.back().tensor;
}

Param& ParamStore::param(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter: " + name);
  return params_[it->second];
}

const Tensor& ParamStore::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter: " + name);
  return params_[it->second].tensor;
}

Tensor& ParamStore::get(const std::string& name) { return param(name).tensor; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::size_t ParamStore::trainable_count() const {
  std::size_t total = 0;
  for (const auto& p : params_)
    if (p.trainable) total += p.tensor.numel();
  return total;
}

Tensor init_uniform(Shape shape, double bound, Rng& rng) {
  const auto n = shape_numel(shape);
  std::vector<Real> data(n);
  for (auto& x : data) x = static_cast<Real>(rng.uniform(-bound, bound));
  return Tensor::from_data(std::move(shape), std::move(data));
}

Tensor init_fan_in(Shape shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw ValidationError("init_fan_in: fan_in must be positive");
  return init_uniform(std::move(shape), std::sqrt(1.0 / static_cast<double>(fan_in)),
                      rng);
}

void adamw_update(std::span<Real> values, std::span<const Real> grads,
                  std::span<Real> first_moment, std::span<Real> second_moment,
                  std::uint64_t& step, const AdamWOptions& o) {
  if (!(o.lr > 0.0)) throw ValidationError("adamw: learning rate must be positive");
  if (grads.size() != values.size() || first_moment.size() != values.size() ||
      second_moment.size() != values.size()) {
    throw ShapeError("adamw: buffer length mismatch");
  }
  ++step;
  const double t = static_cast<double>(step);
  const double bias1 = 1.0 - std::pow(o.beta1, t);
  const double bias2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < values.size(); ++i) {
    double p = values[i];
    const double g = grads[i];
    p -= o.lr * o.weight_decay * p;
    const double m = o.beta1 * first_moment[i] + (1.0 - o.beta1) * g;
    const double v = o.beta2 * second_moment[i] + (1.0 - o.beta2) * g * g;
    first_moment[i] = static_cast<Real>(m);
    second_moment[i] = static_cast<Real>(v);
    p -= o.lr * (m / bias1) / (std::sqrt(v / bias2) + o.eps);
    values[i] = static_cast<Real>(p);
  }
}

void adamw_step(ParamStore& store, const AdamWOptions& options) {
  if (!(options.lr > 0.0)) throw ValidationError("adamw: learning rate must be positive");
  for (auto& p : store.params()) {
    if (!p.trainable || p.tensor.grad().empty()) continue;
    adamw_update(p.tensor.mutable_data(), p.tensor.grad(), p.first_moment,
                 p.second_moment, p.step, options);
  }
}

FASTRE_END_NAMESPACE

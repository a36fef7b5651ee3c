#pragma once

#include <cstdint>
#include <span>

#include "fastre/params.hpp"

FASTRE_BEGIN_NAMESPACE

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// One decoupled-weight-decay Adam update of a single buffer:
///   p <- p - lr * wd * p
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,  step <- step + 1
///   p <- p - lr * (m / (1 - b1^step)) / (sqrt(v / (1 - b2^step)) + eps)
void adamw_update(std::span<Real> values, std::span<const Real> grads,
                  std::span<Real> first_moment, std::span<Real> second_moment,
                  std::uint64_t& step, const AdamWOptions& options);

/// Applies adamw_update to every trainable parameter that holds a gradient.
/// Rejects lr <= 0.
void adamw_step(ParamStore& store, const AdamWOptions& options);

FASTRE_END_NAMESPACE

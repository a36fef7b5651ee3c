#pragma once

#include <span>

#include "fastre/tensor.hpp"

FASTRE_BEGIN_NAMESPACE

// One self-attention layer. Weights are [d, d] in (out, in) layout.
struct AttentionParams {
  Tensor wq, bq;
  Tensor wk, bk;
  Tensor wv, bv;
};

/// softmax(Q K^T / sqrt(d_k)) V with Q = H Wq^T + bq (likewise K, V).
/// With heads > 1 the feature axis is split evenly and d_k = d / heads.
Tensor aux_features(const Tensor& h, const AttentionParams& params,
                    std::size_t heads = 1, std::span<const std::size_t> segments = {});

// Single-segment attention probabilities of one head, [n, n]. Not traced.
Tensor attention_weights(const Tensor& h, const AttentionParams& params,
                         std::size_t heads = 1, std::size_t head = 0);

FASTRE_END_NAMESPACE

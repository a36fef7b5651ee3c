#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fastre/config.hpp"
#include "fastre/rng.hpp"
#include "fastre/tensor.hpp"

FASTRE_BEGIN_NAMESPACE

struct EmbeddingParams {
  Tensor projection_weight;  // [d, glove_dim]
  Tensor projection_bias;    // [d]
  Tensor position;           // [max_len, d]
};

struct BlockParams {
  Tensor conv_a_kernel;  // [d, d, k]
  Tensor conv_a_bias;    // [d]
  Tensor conv_b_kernel;  // undefined when the gate is ablated
  Tensor conv_b_bias;
};

struct BlockOptions {
  bool gated = true;
  bool residual = true;
  double dropout_rate = 0.0;
  bool training = false;
};

/// X = projection(word_vectors) + position rows. Positions restart at 0 in
/// every segment. Throws ValidationError if a segment exceeds the position
/// table.
Tensor embed_vectors(const Tensor& word_vectors, const EmbeddingParams& params,
                     std::span<const std::size_t> segments = {});

// Frozen-table lookup followed by embed_vectors.
Tensor embed_input(std::span<const std::int64_t> token_ids, const Tensor& glove_table,
                   const EmbeddingParams& params,
                   std::span<const std::size_t> segments = {});

/// Y = conv_a(X) * sigmoid(conv_b(X)) + X, then dropout in training mode.
/// The gate and residual terms can be switched off for ablations.
Tensor block_forward(const Tensor& x, const BlockParams& params, std::size_t dilation,
                     const BlockOptions& options, Rng& rng,
                     std::span<const std::size_t> segments = {});

/// H = Block_L(... Block_1(X)). `dilations` must have one entry per block.
Tensor encode(const Tensor& x, std::span<const BlockParams> blocks,
              std::span<const std::size_t> dilations, const BlockOptions& options,
              Rng& rng, std::span<const std::size_t> segments = {});

// Width of input positions that can influence one output row.
std::size_t receptive_field(std::span<const std::size_t> dilations,
                            std::size_t kernel_size);

FASTRE_END_NAMESPACE

#include "fastre/encoder.hpp"

#include "fastre/errors.hpp"
#include "fastre/ops.hpp"

FASTRE_BEGIN_NAMESPACE

Tensor embed_vectors(const Tensor& word_vectors, const EmbeddingParams& params,
                     std::span<const std::size_t> segments) {
  const std::size_t n = word_vectors.dim(0);
  const std::size_t max_len = params.position.dim(0);
  std::vector<std::size_t> segs(segments.begin(), segments.end());
  if (segs.empty()) segs.push_back(n);
  std::vector<std::int64_t> positions;
  positions.reserve(n);
  for (auto len : segs) {
    if (len > max_len) {
      throw ValidationError("sentence of " + std::to_string(len) +
                            " tokens exceeds max length " + std::to_string(max_len));
    }
    for (std::size_t i = 0; i < len; ++i) positions.push_back(static_cast<std::int64_t>(i));
  }
  if (positions.size() != n) throw ShapeError("embed_vectors: segments do not cover input");
  const Tensor projected =
      linear(word_vectors, params.projection_weight, params.projection_bias);
  return add(projected, embedding_lookup(params.position, positions));
}

Tensor embed_input(std::span<const std::int64_t> token_ids, const Tensor& glove_table,
                   const EmbeddingParams& params, std::span<const std::size_t> segments) {
  return embed_vectors(embedding_lookup(glove_table, token_ids), params, segments);
}

Tensor block_forward(const Tensor& x, const BlockParams& params, std::size_t dilation,
                     const BlockOptions& options, Rng& rng,
                     std::span<const std::size_t> segments) {
  Tensor y = conv1d_dilated(x, params.conv_a_kernel, params.conv_a_bias, dilation, segments);
  if (options.gated) {
    if (!params.conv_b_kernel.defined()) {
      throw ValidationError("block_forward: gated block without conv_b parameters");
    }
    const Tensor gate = sigmoid(
        conv1d_dilated(x, params.conv_b_kernel, params.conv_b_bias, dilation, segments));
    y = mul(y, gate);
  }
  if (options.residual) y = add(y, x);
  return dropout(y, options.dropout_rate, options.training, rng);
}

Tensor encode(const Tensor& x, std::span<const BlockParams> blocks,
              std::span<const std::size_t> dilations, const BlockOptions& options,
              Rng& rng, std::span<const std::size_t> segments) {
  if (blocks.size() != dilations.size()) {
    throw ValidationError("encode: " + std::to_string(blocks.size()) + " blocks but " +
                          std::to_string(dilations.size()) + " dilation rates");
  }
  Tensor h = x;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    h = block_forward(h, blocks[i], dilations[i], options, rng, segments);
  return h;
}

std::size_t receptive_field(std::span<const std::size_t> dilations,
                            std::size_t kernel_size) {
  std::size_t width = 1;
  for (auto d : dilations) width += d * (kernel_size - 1);
  return width;
}

FASTRE_END_NAMESPACE

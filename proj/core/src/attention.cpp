#include "fastre/attention.hpp"

#include <cmath>

#include "fastre/errors.hpp"
#include "fastre/ops.hpp"

FASTRE_BEGIN_NAMESPACE

Tensor aux_features(const Tensor& h, const AttentionParams& p, std::size_t heads,
                    std::span<const std::size_t> segments) {
  const Tensor q = linear(h, p.wq, p.bq);
  const Tensor k = linear(h, p.wk, p.bk);
  const Tensor v = linear(h, p.wv, p.bv);
  return scaled_dot_attention(q, k, v, heads, segments);
}

Tensor attention_weights(const Tensor& h, const AttentionParams& p, std::size_t heads,
                         std::size_t head) {
  NoGradGuard no_grad;
  const std::size_t d = h.dim(1);
  if (heads == 0 || d % heads != 0 || head >= heads) {
    throw ShapeError("attention_weights: invalid head selection");
  }
  const std::size_t dk = d / heads;
  const Tensor q = slice_cols(linear(h, p.wq, p.bq), head * dk, (head + 1) * dk);
  const Tensor k = slice_cols(linear(h, p.wk, p.bk), head * dk, (head + 1) * dk);
  return softmax_rows(scale(matmul(q, transpose(k)),
                            static_cast<Real>(1.0 / std::sqrt(static_cast<double>(dk)))));
}

FASTRE_END_NAMESPACE

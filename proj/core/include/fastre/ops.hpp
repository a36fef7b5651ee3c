#pragma once

// Differentiable tensor operations. Every op validates shapes and throws
// ShapeError on mismatch; there is no implicit broadcasting except where an
// op says so (add_row_vector).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fastre/rng.hpp"
#include "fastre/tensor.hpp"

FASTRE_BEGIN_NAMESPACE

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real factor);

// x: [n, c], v: [c]; adds v to every row.
Tensor add_row_vector(const Tensor& x, const Tensor& v);

Tensor sigmoid(const Tensor& x);
Tensor softmax_rows(const Tensor& x);

// a: [p, q], b: [q, r] -> [p, r]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// x: [n, in], weight: [out, in], bias: [out] or undefined -> x * weight^T + bias
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = {});

// Joins along the last axis; all leading dimensions must agree.
Tensor concat_last_dim(std::span<const Tensor> parts);
Tensor concat_last_dim(std::initializer_list<Tensor> parts);

// table: [V, d], ids: [n] -> [n, d]
Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> ids);

Tensor reshape(const Tensor& x, Shape shape);

// x: [p, q] -> columns [begin, end)
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);

// x: [p, q] -> rows [begin, end)
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

Tensor sum(const Tensor& x);

/// Same-length dilated 1-D convolution over the rows of `input`.
///
/// input: [n, d_in], kernel: [d_out, d_in, k], bias: [d_out] -> [n, d_out].
/// out[i, o] = bias[o] + sum_{j<k, c<d_in} kernel[o, c, j] *
///             input[i + (j - (k-1)/2) * dilation, c], out-of-range rows are 0.
///
/// `segments` optionally splits the rows into independent sequences (packed
/// batch); taps never cross a segment boundary. Empty means one segment.
Tensor conv1d_dilated(const Tensor& input, const Tensor& kernel,
                      const Tensor& bias, std::size_t dilation,
                      std::span<const std::size_t> segments = {});

/// softmax(Q K^T / sqrt(d_k)) V computed independently per segment and per
/// head (heads split the feature axis; d_k = d / heads).
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::size_t heads = 1,
                            std::span<const std::size_t> segments = {});

FASTRE_END_NAMESPACE

#include "fastre/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <numeric>

#include "eigen_maps.hpp"
#include "fastre/detail/autograd.hpp"
#include "fastre/errors.hpp"

FASTRE_BEGIN_NAMESPACE

using detail::Node;
using detail::wants_grad;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.defined() && b.defined(), std::string(op) + ": undefined operand");
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  require(t.defined(), std::string(op) + ": undefined operand");
  require(t.rank() == rank, std::string(op) + ": expected rank " +
                                std::to_string(rank) + ", got shape " +
                                shape_string(t.shape()));
}

std::vector<std::size_t> resolve_segments(std::span<const std::size_t> segments,
                                          std::size_t rows, const char* op) {
  if (segments.empty()) return {rows};
  std::size_t total = 0;
  for (auto s : segments) total += s;
  require(total == rows, std::string(op) + ": segment lengths sum to " +
                             std::to_string(total) + ", expected " +
                             std::to_string(rows));
  return {segments.begin(), segments.end()};
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.numel());
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  Node* an = a.node();
  Node* bn = b.node();
  return detail::make_result(
      a.shape(), std::move(out), detail::needs_trace({&a, &b}),
      {a.node_ptr(), b.node_ptr()}, [an, bn](Node& self) {
        for (Node* in : {an, bn}) {
          if (!wants_grad(in)) continue;
          auto& g = in->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.numel());
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  Node* an = a.node();
  Node* bn = b.node();
  return detail::make_result(
      a.shape(), std::move(out), detail::needs_trace({&a, &b}),
      {a.node_ptr(), b.node_ptr()}, [an, bn](Node& self) {
        if (wants_grad(an)) {
          auto& g = an->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->data[i];
        }
        if (wants_grad(bn)) {
          auto& g = bn->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->data[i];
        }
      });
}

Tensor scale(const Tensor& a, Real factor) {
  require(a.defined(), "scale: undefined operand");
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& x : out) x *= factor;
  Node* an = a.node();
  return detail::make_result(a.shape(), std::move(out), detail::needs_trace({&a}),
                             {a.node_ptr()}, [an, factor](Node& self) {
                               auto& g = an->ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 g[i] += self.grad[i] * factor;
                             });
}

Tensor add_row_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 2, "add_row_vector");
  require_rank(v, 1, "add_row_vector");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  require(v.dim(0) == cols, "add_row_vector: vector length " +
                                std::to_string(v.dim(0)) + " vs row width " +
                                std::to_string(cols));
  std::vector<Real> out(x.data().begin(), x.data().end());
  const auto vd = v.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += vd[c];
  Node* xn = x.node();
  Node* vn = v.node();
  return detail::make_result(
      x.shape(), std::move(out), detail::needs_trace({&x, &v}),
      {x.node_ptr(), v.node_ptr()}, [xn, vn, rows, cols](Node& self) {
        if (wants_grad(xn)) {
          auto& g = xn->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (wants_grad(vn)) {
          auto& g = vn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
        }
      });
}

Tensor sigmoid(const Tensor& x) {
  require(x.defined(), "sigmoid: undefined operand");
  std::vector<Real> out(x.numel());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    // Split by sign so exp() never overflows.
    const Real v = xd[i];
    if (v >= 0) {
      out[i] = Real{1} / (Real{1} + std::exp(-v));
    } else {
      const Real e = std::exp(v);
      out[i] = e / (Real{1} + e);
    }
  }
  Node* xn = x.node();
  return detail::make_result(x.shape(), std::move(out), detail::needs_trace({&x}),
                             {x.node_ptr()}, [xn](Node& self) {
                               auto& g = xn->ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 const Real s = self.data[i];
                                 g[i] += self.grad[i] * s * (Real{1} - s);
                               }
                             });
}

namespace {
void softmax_row(const Real* in, Real* out, std::size_t n) {
  Real m = in[0];
  for (std::size_t j = 1; j < n; ++j) m = std::max(m, in[j]);
  Real total = 0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::exp(in[j] - m);
    total += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= total;
}

// dX = P * (dP - rowsum(dP * P)), accumulated into dx.
void softmax_row_backward(const Real* p, const Real* dp, Real* dx, std::size_t n) {
  Real dot = 0;
  for (std::size_t j = 0; j < n; ++j) dot += dp[j] * p[j];
  for (std::size_t j = 0; j < n; ++j) dx[j] += p[j] * (dp[j] - dot);
}
}  // namespace

Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  require(cols > 0, "softmax_rows: zero columns");
  std::vector<Real> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r)
    softmax_row(x.data().data() + r * cols, out.data() + r * cols, cols);
  Node* xn = x.node();
  return detail::make_result(
      x.shape(), std::move(out), detail::needs_trace({&x}), {x.node_ptr()},
      [xn, rows, cols](Node& self) {
        auto& g = xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
          softmax_row_backward(self.data.data() + r * cols,
                               self.grad.data() + r * cols, g.data() + r * cols,
                               cols);
      });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const auto p = static_cast<Eigen::Index>(a.dim(0));
  const auto q = static_cast<Eigen::Index>(a.dim(1));
  const auto r = static_cast<Eigen::Index>(b.dim(1));
  require(a.dim(1) == b.dim(0), "matmul: inner dimensions " +
                                    shape_string(a.shape()) + " x " +
                                    shape_string(b.shape()));
  std::vector<Real> out(static_cast<std::size_t>(p * r));
  detail::map(out.data(), p, r).noalias() =
      detail::cmap(a.data().data(), p, q) * detail::cmap(b.data().data(), q, r);
  Node* an = a.node();
  Node* bn = b.node();
  return detail::make_result(
      {a.dim(0), b.dim(1)}, std::move(out), detail::needs_trace({&a, &b}),
      {a.node_ptr(), b.node_ptr()}, [an, bn, p, q, r](Node& self) {
        const auto dout = detail::cmap(self.grad.data(), p, r);
        if (wants_grad(an)) {
          detail::map(an->ensure_grad().data(), p, q).noalias() +=
              dout * detail::cmap(bn->data.data(), q, r).transpose();
        }
        if (wants_grad(bn)) {
          detail::map(bn->ensure_grad().data(), q, r).noalias() +=
              detail::cmap(an->data.data(), p, q).transpose() * dout;
        }
      });
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const auto p = static_cast<Eigen::Index>(x.dim(0));
  const auto q = static_cast<Eigen::Index>(x.dim(1));
  std::vector<Real> out(x.numel());
  detail::map(out.data(), q, p) = detail::cmap(x.data().data(), p, q).transpose();
  Node* xn = x.node();
  return detail::make_result({x.dim(1), x.dim(0)}, std::move(out),
                             detail::needs_trace({&x}), {x.node_ptr()},
                             [xn, p, q](Node& self) {
                               detail::map(xn->ensure_grad().data(), p, q) +=
                                   detail::cmap(self.grad.data(), q, p).transpose();
                             });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(x.dim(1));
  const auto outw = static_cast<Eigen::Index>(weight.dim(0));
  require(weight.dim(1) == x.dim(1), "linear: input width " +
                                         std::to_string(x.dim(1)) +
                                         " vs weight " +
                                         shape_string(weight.shape()));
  if (bias.defined()) {
    require_rank(bias, 1, "linear");
    require(bias.dim(0) == weight.dim(0), "linear: bias length mismatch");
  }
  std::vector<Real> out(static_cast<std::size_t>(n * outw));
  auto o = detail::map(out.data(), n, outw);
  o.noalias() = detail::cmap(x.data().data(), n, in) *
                detail::cmap(weight.data().data(), outw, in).transpose();
  if (bias.defined()) {
    const auto bd = bias.data();
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < outw; ++c) o(r, c) += bd[c];
  }
  Node* xn = x.node();
  Node* wn = weight.node();
  Node* bn = bias.defined() ? bias.node() : nullptr;
  std::vector<std::shared_ptr<Node>> inputs{x.node_ptr(), weight.node_ptr()};
  if (bn) inputs.push_back(bias.node_ptr());
  return detail::make_result(
      {x.dim(0), weight.dim(0)}, std::move(out),
      detail::needs_trace({&x, &weight, &bias}), std::move(inputs),
      [xn, wn, bn, n, in, outw](Node& self) {
        const auto dout = detail::cmap(self.grad.data(), n, outw);
        if (wants_grad(xn)) {
          detail::map(xn->ensure_grad().data(), n, in).noalias() +=
              dout * detail::cmap(wn->data.data(), outw, in);
        }
        if (wants_grad(wn)) {
          detail::map(wn->ensure_grad().data(), outw, in).noalias() +=
              dout.transpose() * detail::cmap(xn->data.data(), n, in);
        }
        if (wants_grad(bn)) {
          auto& g = bn->ensure_grad();
          for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < outw; ++c) g[c] += dout(r, c);
        }
      });
}

Tensor concat_last_dim(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_last_dim: no operands");
  const Shape& first = parts[0].shape();
  require(!first.empty(), "concat_last_dim: rank-0 operand");
  const std::size_t rank = first.size();
  std::size_t total_width = 0;
  std::vector<std::size_t> widths;
  for (const auto& t : parts) {
    require(t.defined() && t.rank() == rank,
            "concat_last_dim: rank mismatch");
    for (std::size_t a = 0; a + 1 < rank; ++a)
      require(t.dim(a) == first[a], "concat_last_dim: leading dims " +
                                        shape_string(t.shape()) + " vs " +
                                        shape_string(first));
    widths.push_back(t.shape().back());
    total_width += t.shape().back();
  }
  const std::size_t rows = shape_numel(first) / first.back();
  std::vector<Real> out(rows * total_width);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto d = parts[p].data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(d.data() + r * widths[p], widths[p],
                  out.data() + r * total_width + offset);
    offset += widths[p];
  }
  Shape shape = first;
  shape.back() = total_width;
  std::vector<std::shared_ptr<Node>> inputs;
  std::vector<Node*> raw;
  for (const auto& t : parts) {
    inputs.push_back(t.node_ptr());
    raw.push_back(t.node());
  }
  std::vector<Tensor> parts_copy(parts.begin(), parts.end());
  return detail::make_result(
      std::move(shape), std::move(out), detail::needs_trace(parts_copy),
      std::move(inputs), [raw, widths, rows, total_width](Node& self) {
        std::size_t off = 0;
        for (std::size_t p = 0; p < raw.size(); ++p) {
          if (wants_grad(raw[p])) {
            auto& g = raw[p]->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < widths[p]; ++c)
                g[r * widths[p] + c] += self.grad[r * total_width + off + c];
          }
          off += widths[p];
        }
      });
}

Tensor concat_last_dim(std::initializer_list<Tensor> parts) {
  return concat_last_dim(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> ids) {
  require_rank(table, 2, "embedding_lookup");
  const std::size_t vocab = table.dim(0);
  const std::size_t width = table.dim(1);
  std::vector<std::int64_t> idx(ids.begin(), ids.end());
  for (auto id : idx) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ValidationError("embedding_lookup: id " + std::to_string(id) +
                            " outside table of " + std::to_string(vocab) +
                            " rows");
    }
  }
  std::vector<Real> out(idx.size() * width);
  const auto td = table.data();
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(td.data() + static_cast<std::size_t>(idx[r]) * width, width,
                out.data() + r * width);
  Node* tn = table.node();
  const std::size_t rows = idx.size();
  return detail::make_result(
      {rows, width}, std::move(out), detail::needs_trace({&table}),
      {table.node_ptr()}, [tn, idx = std::move(idx), width](Node& self) {
        auto& g = tn->ensure_grad();
        for (std::size_t r = 0; r < idx.size(); ++r) {
          Real* dst = g.data() + static_cast<std::size_t>(idx[r]) * width;
          const Real* src = self.grad.data() + r * width;
          for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
        }
      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(x.defined(), "reshape: undefined operand");
  require(shape_numel(shape) == x.numel(), "reshape: " + shape_string(x.shape()) +
                                               " -> " + shape_string(shape));
  std::vector<Real> out(x.data().begin(), x.data().end());
  Node* xn = x.node();
  return detail::make_result(std::move(shape), std::move(out),
                             detail::needs_trace({&x}), {x.node_ptr()},
                             [xn](Node& self) {
                               auto& g = xn->ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 g[i] += self.grad[i];
                             });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  require(begin <= end && end <= cols, "slice_cols: range [" +
                                           std::to_string(begin) + ", " +
                                           std::to_string(end) + ") of " +
                                           std::to_string(cols) + " columns");
  const std::size_t width = end - begin;
  std::vector<Real> out(rows * width);
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xd.data() + r * cols + begin, width, out.data() + r * width);
  Node* xn = x.node();
  return detail::make_result(
      {rows, width}, std::move(out), detail::needs_trace({&x}), {x.node_ptr()},
      [xn, rows, cols, begin, width](Node& self) {
        auto& g = xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < width; ++c)
            g[r * cols + begin + c] += self.grad[r * width + c];
      });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_rows");
  const std::size_t cols = x.dim(1);
  require(begin <= end && end <= x.dim(0), "slice_rows: range [" +
                                               std::to_string(begin) + ", " +
                                               std::to_string(end) + ") of " +
                                               std::to_string(x.dim(0)) + " rows");
  std::vector<Real> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                        x.data().begin() + static_cast<std::ptrdiff_t>(end * cols));
  Node* xn = x.node();
  const std::size_t offset = begin * cols;
  return detail::make_result({end - begin, cols}, std::move(out),
                             detail::needs_trace({&x}), {x.node_ptr()},
                             [xn, offset](Node& self) {
                               auto& g = xn->ensure_grad();
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 g[offset + i] += self.grad[i];
                             });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ValidationError("dropout: rate " + std::to_string(rate) +
                          " outside [0, 1)");
  }
  require(x.defined(), "dropout: undefined operand");
  if (!training || rate == 0.0) return x;
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  std::vector<Real> mask(x.numel());
  for (auto& m : mask) m = rng.uniform01() < rate ? Real{0} : keep_scale;
  std::vector<Real> out(x.numel());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * mask[i];
  Node* xn = x.node();
  return detail::make_result(x.shape(), std::move(out), detail::needs_trace({&x}),
                             {x.node_ptr()}, [xn, mask = std::move(mask)](Node& self) {
                               auto& g = xn->ensure_grad();
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 g[i] += self.grad[i] * mask[i];
                             });
}

Tensor sum(const Tensor& x) {
  require(x.defined(), "sum: undefined operand");
  Real total = 0;
  for (Real v : x.data()) total += v;
  Node* xn = x.node();
  return detail::make_result({}, {total}, detail::needs_trace({&x}), {x.node_ptr()},
                             [xn](Node& self) {
                               auto& g = xn->ensure_grad();
                               for (auto& v : g) v += self.grad[0];
                             });
}

Tensor conv1d_dilated(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                      std::size_t dilation, std::span<const std::size_t> segments) {
  require_rank(input, 2, "conv1d_dilated");
  require_rank(kernel, 3, "conv1d_dilated");
  require_rank(bias, 1, "conv1d_dilated");
  const std::size_t n = input.dim(0);
  const std::size_t d_in = input.dim(1);
  const std::size_t d_out = kernel.dim(0);
  const std::size_t taps = kernel.dim(2);
  if (taps % 2 == 0) {
    throw ValidationError("conv1d_dilated: kernel size must be odd, got " +
                          std::to_string(taps));
  }
  if (dilation < 1) throw ValidationError("conv1d_dilated: dilation must be >= 1");
  require(kernel.dim(1) == d_in, "conv1d_dilated: kernel " +
                                     shape_string(kernel.shape()) +
                                     " vs input " + shape_string(input.shape()));
  require(bias.dim(0) == d_out, "conv1d_dilated: bias length mismatch");
  const auto segs = resolve_segments(segments, n, "conv1d_dilated");

  // im2col: cols[i, c * taps + j] = input[i + (j - half) * dilation, c]
  const std::size_t width = d_in * taps;
  const auto half = static_cast<std::ptrdiff_t>((taps - 1) / 2);
  const auto xd = input.data();
  // Segment start and length of every row.
  std::vector<std::pair<std::size_t, std::size_t>> row_seg(n);
  {
    std::size_t start = 0;
    for (const std::size_t len : segs) {
      for (std::size_t i = 0; i < len; ++i) row_seg[start + i] = {start, len};
      start += len;
    }
  }
  auto fill_cols = [&](Real* dst, std::size_t r0, std::size_t r1) {
    std::fill(dst, dst + (r1 - r0) * width, Real{0});
    for (std::size_t r = r0; r < r1; ++r) {
      const auto [seg_start, len] = row_seg[r];
      const auto i = static_cast<std::ptrdiff_t>(r - seg_start);
      Real* row = dst + (r - r0) * width;
      for (std::size_t j = 0; j < taps; ++j) {
        const auto src = i + (static_cast<std::ptrdiff_t>(j) - half) *
                                 static_cast<std::ptrdiff_t>(dilation);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
        const Real* x = xd.data() + (seg_start + static_cast<std::size_t>(src)) * d_in;
        for (std::size_t c = 0; c < d_in; ++c) row[c * taps + j] = x[c];
      }
    }
  };

  const auto kw = static_cast<Eigen::Index>(width);
  const auto od = static_cast<Eigen::Index>(d_out);
  const auto kmat = detail::cmap(kernel.data().data(), od, kw);
  const auto bd = bias.data();
  std::vector<Real> out(n * d_out);
  const bool traced = detail::needs_trace({&input, &kernel, &bias});
  std::shared_ptr<std::vector<Real>> cols;
  if (traced) {
    // The backward pass reuses the full column matrix.
    cols = std::make_shared<std::vector<Real>>(n * width);
    fill_cols(cols->data(), 0, n);
    detail::map(out.data(), static_cast<Eigen::Index>(n), od).noalias() =
        detail::cmap(cols->data(), static_cast<Eigen::Index>(n), kw) * kmat.transpose();
  } else {
    // Row blocks keep the column buffer cache-resident for long inputs.
    constexpr std::size_t kBlockRows = 64;
    std::vector<Real> block(std::min(n, kBlockRows) * width);
    for (std::size_t r0 = 0; r0 < n; r0 += kBlockRows) {
      const std::size_t r1 = std::min(n, r0 + kBlockRows);
      const auto m = static_cast<Eigen::Index>(r1 - r0);
      fill_cols(block.data(), r0, r1);
      detail::map(out.data() + r0 * d_out, m, od).noalias() =
          detail::cmap(block.data(), m, kw) * kmat.transpose();
    }
  }
  const auto rows = static_cast<Eigen::Index>(n);
  auto o = detail::map(out.data(), rows, od);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < od; ++c) o(r, c) += bd[c];

  Node* xn = input.node();
  Node* kn = kernel.node();
  Node* bn = bias.node();
  return detail::make_result(
      {n, d_out}, std::move(out), traced,
      {input.node_ptr(), kernel.node_ptr(), bias.node_ptr()},
      [xn, kn, bn, cols, segs, rows, kw, od, d_in, taps, half, dilation,
       width](Node& self) {
        const auto dout = detail::cmap(self.grad.data(), rows, od);
        if (wants_grad(kn)) {
          detail::map(kn->ensure_grad().data(), od, kw).noalias() +=
              dout.transpose() * detail::cmap(cols->data(), rows, kw);
        }
        if (wants_grad(bn)) {
          auto& g = bn->ensure_grad();
          for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < od; ++c) g[c] += dout(r, c);
        }
        if (wants_grad(xn)) {
          detail::RowMatrix dcols =
              dout * detail::cmap(kn->data.data(), od, kw);
          auto& g = xn->ensure_grad();
          std::size_t start = 0;
          for (const std::size_t len : segs) {
            for (std::size_t i = 0; i < len; ++i) {
              const Real* row = dcols.data() + (start + i) * width;
              for (std::size_t j = 0; j < taps; ++j) {
                const auto src = static_cast<std::ptrdiff_t>(i) +
                                 (static_cast<std::ptrdiff_t>(j) - half) *
                                     static_cast<std::ptrdiff_t>(dilation);
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                Real* dst = g.data() + (start + static_cast<std::size_t>(src)) * d_in;
                for (std::size_t c = 0; c < d_in; ++c) dst[c] += row[c * taps + j];
              }
            }
            start += len;
          }
        }
      });
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::size_t heads, std::span<const std::size_t> segments) {
  require_rank(q, 2, "scaled_dot_attention");
  require_same_shape(q, k, "scaled_dot_attention");
  require_same_shape(q, v, "scaled_dot_attention");
  const std::size_t n = q.dim(0);
  const std::size_t d = q.dim(1);
  require(heads >= 1 && d % heads == 0,
          "scaled_dot_attention: width " + std::to_string(d) +
              " not divisible by " + std::to_string(heads) + " heads");
  const auto segs = resolve_segments(segments, n, "scaled_dot_attention");
  const std::size_t dk = d / heads;
  const Real inv_sqrt = Real{1} / std::sqrt(static_cast<Real>(dk));
  const auto stride = Eigen::OuterStride<>(static_cast<Eigen::Index>(d));

  // Attention probabilities per (segment, head), kept for the backward pass.
  auto probs = std::make_shared<std::vector<detail::RowMatrix>>();
  std::vector<Real> out(n * d, Real{0});
  std::size_t start = 0;
  for (const std::size_t len : segs) {
    const auto m = static_cast<Eigen::Index>(len);
    const auto w = static_cast<Eigen::Index>(dk);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = start * d + h * dk;
      detail::ConstStridedMap qh(q.data().data() + off, m, w, stride);
      detail::ConstStridedMap kh(k.data().data() + off, m, w, stride);
      detail::ConstStridedMap vh(v.data().data() + off, m, w, stride);
      detail::RowMatrix scores = (qh * kh.transpose()) * inv_sqrt;
      detail::RowMatrix p(m, m);
      for (Eigen::Index r = 0; r < m; ++r)
        softmax_row(scores.data() + r * m, p.data() + r * m, len);
      detail::StridedMap oh(out.data() + off, m, w, stride);
      oh.noalias() = p * vh;
      probs->push_back(std::move(p));
    }
    start += len;
  }

  Node* qn = q.node();
  Node* kn = k.node();
  Node* vn = v.node();
  return detail::make_result(
      {n, d}, std::move(out), detail::needs_trace({&q, &k, &v}),
      {q.node_ptr(), k.node_ptr(), v.node_ptr()},
      [qn, kn, vn, probs, segs, heads, d, dk, inv_sqrt](Node& self) {
        const auto stride = Eigen::OuterStride<>(static_cast<Eigen::Index>(d));
        auto& gq = qn->ensure_grad();
        auto& gk = kn->ensure_grad();
        auto& gv = vn->ensure_grad();
        std::size_t start = 0;
        std::size_t idx = 0;
        for (const std::size_t len : segs) {
          const auto m = static_cast<Eigen::Index>(len);
          const auto w = static_cast<Eigen::Index>(dk);
          for (std::size_t h = 0; h < heads; ++h, ++idx) {
            const std::size_t off = start * d + h * dk;
            const auto& p = (*probs)[idx];
            detail::ConstStridedMap dout(self.grad.data() + off, m, w, stride);
            detail::ConstStridedMap qh(qn->data.data() + off, m, w, stride);
            detail::ConstStridedMap kh(kn->data.data() + off, m, w, stride);
            detail::ConstStridedMap vh(vn->data.data() + off, m, w, stride);
            detail::RowMatrix dp = dout * vh.transpose();
            detail::RowMatrix ds = detail::RowMatrix::Zero(m, m);
            for (Eigen::Index r = 0; r < m; ++r)
              softmax_row_backward(p.data() + r * m, dp.data() + r * m,
                                   ds.data() + r * m, len);
            ds *= inv_sqrt;
            detail::StridedMap(gv.data() + off, m, w, stride).noalias() +=
                p.transpose() * dout;
            detail::StridedMap(gq.data() + off, m, w, stride).noalias() += ds * kh;
            detail::StridedMap(gk.data() + off, m, w, stride).noalias() +=
                ds.transpose() * qh;
          }
          start += len;
        }
      });
}

FASTRE_END_NAMESPACE

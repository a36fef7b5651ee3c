#include "fastre/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fastre/detail/autograd.hpp"
#include "fastre/errors.hpp"
#include "fastre/ops.hpp"

FASTRE_BEGIN_NAMESPACE

void PositionLabels::set(std::size_t position, std::size_t cls) {
  if (position >= positions_ || cls >= classes_) {
    throw ValidationError("label (" + std::to_string(position) + ", " + std::to_string(cls) +
                          ") outside " + std::to_string(positions_) + "x" +
                          std::to_string(classes_));
  }
  positive_[position * classes_ + cls] = 1;
}

std::size_t PositionLabels::positive_count() const {
  return static_cast<std::size_t>(std::count(positive_.begin(), positive_.end(), 1));
}

namespace {

void check_inputs(const Tensor& scores, const PositionLabels& labels, const ColumnMask& mask) {
  if (scores.rank() != 2) throw ShapeError("loss: scores must be rank 2");
  const std::size_t n = scores.dim(0);
  const std::size_t width = scores.dim(1);
  if (labels.positions() != n || labels.classes() + 1 != width) {
    throw ShapeError("loss: labels " + std::to_string(labels.positions()) + "x" +
                     std::to_string(labels.classes()) + " vs scores " +
                     shape_string(scores.shape()));
  }
  if (!mask.active.empty()) {
    if (mask.active.size() != width) throw ShapeError("loss: mask width mismatch");
    if (!mask.active[width - 1]) throw ValidationError("loss: AT column must be active");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j + 1 < width; ++j)
        if (labels.is_positive(i, j) && !mask.active[j]) {
          throw ValidationError("loss: positive label on masked column " + std::to_string(j));
        }
  }
}

}  // namespace

Tensor at_loss(const Tensor& scores, const PositionLabels& labels, const ColumnMask& mask) {
  check_inputs(scores, labels, mask);
  const std::size_t n = scores.dim(0);
  const std::size_t width = scores.dim(1);
  const std::size_t at = width - 1;
  const auto s = scores.data();

  // d loss / d score, filled alongside the forward value.
  std::vector<Real> dscores(n * width, Real{0});
  double total = 0.0;
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < n; ++i) {
    const Real* row = s.data() + i * width;
    Real* drow = dscores.data() + i * width;
    pos.clear();
    neg.clear();
    for (std::size_t j = 0; j < at; ++j) {
      if (!mask.is_active(j)) continue;
      (labels.is_positive(i, j) ? pos : neg).push_back(j);
    }
    // Positive part over P_i + AT.
    if (!pos.empty()) {
      double m = row[at];
      for (auto j : pos) m = std::max(m, static_cast<double>(row[j]));
      double z = std::exp(row[at] - m);
      for (auto j : pos) z += std::exp(row[j] - m);
      const double lse = m + std::log(z);
      const double count = static_cast<double>(pos.size());
      for (auto j : pos) {
        total += lse - row[j];
        drow[j] += static_cast<Real>(count * std::exp(row[j] - lse) - 1.0);
      }
      drow[at] += static_cast<Real>(count * std::exp(row[at] - lse));
    }
    // Negative part over N_i + AT.
    {
      double m = row[at];
      for (auto j : neg) m = std::max(m, static_cast<double>(row[j]));
      double z = std::exp(row[at] - m);
      for (auto j : neg) z += std::exp(row[j] - m);
      const double lse = m + std::log(z);
      total += lse - row[at];
      for (auto j : neg) drow[j] += static_cast<Real>(std::exp(row[j] - lse));
      drow[at] += static_cast<Real>(std::exp(row[at] - lse) - 1.0);
    }
  }

  detail::Node* sn = scores.node();
  return detail::make_result(
      {}, {static_cast<Real>(total)}, detail::needs_trace({&scores}), {scores.node_ptr()},
      [sn, dscores = std::move(dscores)](detail::Node& self) {
        auto& g = sn->ensure_grad();
        const Real up = self.grad[0];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += up * dscores[i];
      });
}

Tensor cascade_loss(const Tensor& start_scores, const Tensor& end_scores,
                    const PositionLabels& start_labels, const PositionLabels& end_labels,
                    const ColumnMask& mask) {
  return add(at_loss(start_scores, start_labels, mask), at_loss(end_scores, end_labels, mask));
}

Tensor global_threshold_loss(const Tensor& scores, const PositionLabels& labels,
                             const ColumnMask& mask) {
  check_inputs(scores, labels, mask);
  const std::size_t n = scores.dim(0);
  const std::size_t width = scores.dim(1);
  const auto s = scores.data();
  std::size_t cells = 0;
  for (std::size_t j = 0; j + 1 < width; ++j)
    if (mask.is_active(j)) cells += n;

  std::vector<Real> dscores(n * width, Real{0});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      if (!mask.is_active(j)) continue;
      const double x = s[i * width + j];
      const double y = labels.is_positive(i, j) ? 1.0 : 0.0;
      total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
      const double p = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      dscores[i * width + j] = static_cast<Real>((p - y) / static_cast<double>(cells));
    }
  }
  const Real value = cells == 0 ? Real{0} : static_cast<Real>(total / static_cast<double>(cells));
  detail::Node* sn = scores.node();
  return detail::make_result(
      {}, {value}, detail::needs_trace({&scores}), {scores.node_ptr()},
      [sn, dscores = std::move(dscores)](detail::Node& self) {
        auto& g = sn->ensure_grad();
        const Real up = self.grad[0];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += up * dscores[i];
      });
}

FASTRE_END_NAMESPACE

#pragma once

#include <cstdint>
#include <vector>

#include "fastre/tagger.hpp"
#include "fastre/tensor.hpp"

FASTRE_BEGIN_NAMESPACE

/// Positive classes per position for one [n, C+1] score matrix. Everything
/// not positive (and not AT) is negative.
class PositionLabels {
 public:
  PositionLabels() = default;
  PositionLabels(std::size_t positions, std::size_t classes)
      : positions_(positions), classes_(classes), positive_(positions * classes, 0) {}

  std::size_t positions() const { return positions_; }
  std::size_t classes() const { return classes_; }

  void set(std::size_t position, std::size_t cls);
  bool is_positive(std::size_t position, std::size_t cls) const {
    return positive_[position * classes_ + cls] != 0;
  }
  std::size_t positive_count() const;

  bool operator==(const PositionLabels&) const = default;

 private:
  std::size_t positions_ = 0;
  std::size_t classes_ = 0;
  std::vector<std::uint8_t> positive_;
};

/// Adaptive-thresholding rank loss, summed over positions:
///   sum_{j in P_i} -log softmax_{P_i + AT}(o)_j  -  log softmax_{N_i + AT}(o)_AT
/// N_i holds the active non-positive columns. Masked columns get no gradient.
/// Throws ValidationError if the AT column is masked or a positive label
/// falls on a masked column.
Tensor at_loss(const Tensor& scores, const PositionLabels& labels, const ColumnMask& mask = {});

// at_loss(start) + at_loss(end).
Tensor cascade_loss(const Tensor& start_scores, const Tensor& end_scores,
                    const PositionLabels& start_labels, const PositionLabels& end_labels,
                    const ColumnMask& mask = {});

/// Mean binary cross-entropy of sigmoid(S[i, j]) against the 0/1 labels over
/// every active non-AT cell (global-threshold ablation).
Tensor global_threshold_loss(const Tensor& scores, const PositionLabels& labels,
                             const ColumnMask& mask = {});

FASTRE_END_NAMESPACE

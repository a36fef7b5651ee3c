#include <gtest/gtest.h>

#include <cmath>

#include "fastre/errors.hpp"
#include "fastre/loss.hpp"
#include "fastre/ops.hpp"
#include "test_support.hpp"

using namespace fastre;
using fastre::testing::random_tensor;

namespace {

// Direct transcription with plain exp sums; only valid for moderate scores.
double naive_at_loss(const Tensor& s, const PositionLabels& y, const std::vector<bool>& active) {
  const std::size_t n = s.dim(0), at = s.dim(1) - 1;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double zp = std::exp(s.at(i, at));
    double zn = std::exp(s.at(i, at));
    for (std::size_t j = 0; j < at; ++j) {
      if (!active[j]) continue;
      (y.is_positive(i, j) ? zp : zn) += std::exp(s.at(i, j));
    }
    for (std::size_t j = 0; j < at; ++j)
      if (active[j] && y.is_positive(i, j)) loss -= std::log(std::exp(s.at(i, j)) / zp);
    loss -= std::log(std::exp(s.at(i, at)) / zn);
  }
  return loss;
}

double naive_bce(const Tensor& s, const PositionLabels& y) {
  const std::size_t n = s.dim(0), c = s.dim(1) - 1;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double p = 1.0 / (1.0 + std::exp(-s.at(i, j)));
      total -= y.is_positive(i, j) ? std::log(p) : std::log(1.0 - p);
    }
  return total / static_cast<double>(n * c);
}

PositionLabels sample_labels() {
  PositionLabels y(5, 4);
  y.set(0, 1);
  y.set(1, 0);
  y.set(1, 3);
  y.set(4, 2);
  return y;
}

}  // namespace

TEST(PositionLabels, SetAndCount) {
  auto y = sample_labels();
  EXPECT_EQ(y.positive_count(), 4u);
  EXPECT_TRUE(y.is_positive(1, 3));
  EXPECT_FALSE(y.is_positive(2, 0));
  EXPECT_THROW(y.set(5, 0), ValidationError);
  EXPECT_THROW(y.set(0, 4), ValidationError);
}

TEST(AtLoss, MatchesNaiveOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = random_tensor({5, 5}, rng, 3.0);
    const auto y = sample_labels();
    EXPECT_NEAR(at_loss(s, y).item(), naive_at_loss(s, y, std::vector<bool>(4, true)), 1e-4);
  }
}

TEST(AtLoss, MaskedColumnsExcluded) {
  Rng rng(9);
  const auto s = random_tensor({5, 5}, rng, 3.0);
  PositionLabels y(5, 4);
  y.set(0, 0);
  y.set(3, 3);
  const std::vector<std::size_t> keep{0, 3};
  const auto mask = ColumnMask::for_classes(4, keep);
  EXPECT_NEAR(at_loss(s, y, mask).item(), naive_at_loss(s, y, {true, false, false, true}), 1e-4);

  // Masked columns receive no gradient even when their scores are huge.
  auto x = Tensor::from_data(s.shape(), std::vector<Real>(s.data().begin(), s.data().end()), true);
  x.mutable_data()[1] = 50.f;
  backward(at_loss(x, y, mask));
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(x.grad()[i * 5 + 1], 0.f);
    EXPECT_EQ(x.grad()[i * 5 + 2], 0.f);
  }
}

TEST(AtLoss, InvalidMasksRejected) {
  const auto s = Tensor::zeros({2, 3});
  PositionLabels y(2, 2);
  y.set(0, 1);
  const std::vector<std::size_t> keep{0};
  EXPECT_THROW(at_loss(s, y, ColumnMask::for_classes(2, keep)), ValidationError);
  ColumnMask no_at{{1, 1, 0}};
  EXPECT_THROW(at_loss(s, y, no_at), ValidationError);
  EXPECT_THROW(at_loss(s, PositionLabels(3, 2)), ShapeError);
  EXPECT_THROW(at_loss(s, PositionLabels(2, 3)), ShapeError);
}

TEST(AtLoss, DecreasesAsMarginsGrow) {
  // One positive at column 0; loss is monotone in how far it clears AT and
  // how far the negative sits below AT.
  PositionLabels y(1, 2);
  y.set(0, 0);
  double prev = INFINITY;
  for (float m : {0.f, 1.f, 2.f, 4.f, 8.f}) {
    const auto s = Tensor::from_data({1, 3}, {m, -m, 0.f});
    const double v = at_loss(s, y).item();
    EXPECT_LT(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(AtLoss, ZeroScoresValue) {
  // Every row: negative part is log(C+1). Row with one positive adds log 2.
  PositionLabels y(2, 3);
  y.set(1, 2);
  const auto s = Tensor::zeros({2, 4});
  const double expected = std::log(4.0) + std::log(3.0) + std::log(2.0);
  EXPECT_NEAR(at_loss(s, y).item(), expected, 1e-6);
}

TEST(CascadeLoss, SumOfBoundaryLosses) {
  Rng rng(10);
  const auto a = random_tensor({5, 5}, rng, 2.0);
  const auto b = random_tensor({5, 5}, rng, 2.0);
  const auto ya = sample_labels();
  PositionLabels yb(5, 4);
  yb.set(2, 2);
  EXPECT_NEAR(cascade_loss(a, b, ya, yb).item(), at_loss(a, ya).item() + at_loss(b, yb).item(),
              1e-5);
}

TEST(GlobalThresholdLoss, MatchesNaiveBce) {
  Rng rng(11);
  const auto s = random_tensor({5, 5}, rng, 4.0);
  const auto y = sample_labels();
  EXPECT_NEAR(global_threshold_loss(s, y).item(), naive_bce(s, y), 1e-5);
}

TEST(GlobalThresholdLoss, StableForLargeScores) {
  PositionLabels y(1, 2);
  y.set(0, 0);
  const auto s = Tensor::from_data({1, 3}, {200.f, -200.f, 0.f});
  const double v = global_threshold_loss(s, y).item();
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 0.0, 1e-6);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fastre/checkpoint.hpp"
#include "fastre/errors.hpp"
#include "fastre/ops.hpp"
#include "fastre/optim.hpp"
#include "fastre/params.hpp"
#include "fastre/rng.hpp"
#include "test_support.hpp"

using namespace fastre;

TEST(Rng, EngineMatchesStandardReference) {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  EXPECT_EQ(x, 9981545732273789042ull);
}

TEST(Rng, ConversionsAreDeterministic) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform01();
    EXPECT_EQ(u, b.uniform01());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(a.next(), c.next());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
  EXPECT_EQ(r.below(0), 0u);
  EXPECT_EQ(r.below(1), 0u);
}

TEST(Rng, ShuffleIsSeededPermutation) {
  std::vector<int> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  Rng r1(9), r2(9);
  r1.shuffle(std::span(a));
  r2.shuffle(std::span(b));
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(50);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(sorted, expected);
  EXPECT_NE(a, expected);
}

TEST(Rng, BelowIsRoughlyUniform) {
  Rng r(3);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[r.below(5)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(AdamW, SingleStepMatchesHandComputation) {
  std::vector<Real> p{1.0f, -2.0f};
  const std::vector<Real> g{0.5f, -0.25f};
  std::vector<Real> m(2, 0.f), v(2, 0.f);
  std::uint64_t step = 0;
  AdamWOptions o;
  o.lr = 0.1;
  o.weight_decay = 0.01;
  adamw_update(p, g, m, v, step, o);
  EXPECT_EQ(step, 1u);
  // Decay then the bias-corrected step, which is lr * sign(g) on step one.
  for (std::size_t i = 0; i < 2; ++i) {
    const double start = i == 0 ? 1.0 : -2.0;
    const double decayed = start - 0.1 * 0.01 * start;
    const double mh = g[i];
    const double vh = static_cast<double>(g[i]) * g[i];
    EXPECT_NEAR(p[i], decayed - 0.1 * mh / (std::sqrt(vh) + 1e-8), 1e-6);
  }
  EXPECT_NEAR(m[0], 0.05, 1e-7);
  EXPECT_NEAR(v[0], 0.00025, 1e-9);
}

TEST(AdamW, TwoStepsMatchReferenceLoop) {
  const std::vector<double> grads1{0.3, -0.1, 0.0}, grads2{-0.2, 0.4, 0.1};
  std::vector<Real> p{0.5f, 0.5f, 0.5f}, m(3, 0.f), v(3, 0.f);
  std::uint64_t step = 0;
  AdamWOptions o;
  o.lr = 0.01;
  o.weight_decay = 0.1;
  for (const auto* gs : {&grads1, &grads2}) {
    const std::vector<Real> g(gs->begin(), gs->end());
    adamw_update(p, g, m, v, step, o);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double x = 0.5, mm = 0, vv = 0;
    int t = 0;
    for (const auto* gs : {&grads1, &grads2}) {
      const double gi = (*gs)[i];
      ++t;
      x -= o.lr * o.weight_decay * x;
      mm = 0.9 * mm + 0.1 * gi;
      vv = 0.999 * vv + 0.001 * gi * gi;
      const double mh = mm / (1 - std::pow(0.9, t));
      const double vh = vv / (1 - std::pow(0.999, t));
      x -= o.lr * mh / (std::sqrt(vh) + 1e-8);
    }
    EXPECT_NEAR(p[i], x, 1e-6) << i;
  }
}

TEST(AdamW, RejectsBadInputs) {
  std::vector<Real> p(2), g(3), m(2), v(2);
  std::uint64_t step = 0;
  EXPECT_THROW(adamw_update(p, g, m, v, step, {}), ShapeError);
  AdamWOptions zero;
  zero.lr = 0.0;
  std::vector<Real> g2(2);
  EXPECT_THROW(adamw_update(p, g2, m, v, step, zero), ValidationError);
  ParamStore store;
  EXPECT_THROW(adamw_step(store, zero), ValidationError);
}

TEST(AdamW, StepSkipsFrozenAndGradlessParams) {
  ParamStore store;
  store.add("a", Tensor::full({2}, 1.f, true));
  store.add("frozen", Tensor::full({2}, 1.f, true), false);
  store.add("untouched", Tensor::full({2}, 1.f, true));
  backward(sum(mul(store.get("a"), store.get("frozen"))));
  AdamWOptions o;
  o.lr = 0.5;
  adamw_step(store, o);
  EXPECT_LT(store.get("a").at(0), 1.f);
  EXPECT_EQ(store.get("frozen").at(0), 1.f);
  EXPECT_EQ(store.get("untouched").at(0), 1.f);
  EXPECT_EQ(store.param("a").step, 1u);
  EXPECT_EQ(store.param("frozen").step, 0u);
}

TEST(ParamStore, OrderUniquenessAndCounts) {
  ParamStore store;
  store.add("z", Tensor::zeros({2, 3}));
  store.add("a", Tensor::zeros({4}), false);
  store.add("m", Tensor::zeros({5}));
  EXPECT_EQ(store.names(), (std::vector<std::string>{"z", "a", "m"}));
  EXPECT_EQ(store.trainable_count(), 11u);
  EXPECT_THROW(store.add("a", Tensor::zeros({1})), ValidationError);
  EXPECT_THROW(store.get("missing"), ValidationError);
  EXPECT_TRUE(store.contains("m"));
}

TEST(Init, FanInBoundsAndSeeding) {
  Rng r1(7), r2(7);
  const auto a = init_fan_in({64, 16}, 16, r1);
  const auto b = init_fan_in({64, 16}, 16, r2);
  EXPECT_EQ(fastre::testing::max_abs_diff(a.data(), b.data()), 0.0);
  const double bound = std::sqrt(1.0 / 16.0);
  double lo = 1, hi = -1;
  for (auto x : a.data()) {
    lo = std::min(lo, static_cast<double>(x));
    hi = std::max(hi, static_cast<double>(x));
  }
  EXPECT_GE(lo, -bound);
  EXPECT_LE(hi, bound);
  EXPECT_LT(lo, -0.9 * bound);
  EXPECT_GT(hi, 0.9 * bound);
  EXPECT_THROW(init_fan_in({2}, 0, r1), ValidationError);
  const auto u = init_uniform({100}, 0.1, r1);
  for (auto x : u.data()) EXPECT_LE(std::abs(x), 0.1f);
}

TEST(Checkpoint, RoundTripsRecords) {
  const std::vector<NamedRecord> records{
      {"w", {2, 3}, {1, 2, 3, 4, 5, -6.5f}},
      {"scalar", {}, {3.25f}},
      text_record("meta", R"({"k": "vé"})"),
  };
  const auto bytes = encode_checkpoint(records);
  EXPECT_EQ(bytes.substr(0, 4), "FRE1");
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back, records);
  EXPECT_EQ(record_text(back[2]), R"({"k": "vé"})");
  EXPECT_THROW(record_text(back[0]), FormatError);
}

TEST(Checkpoint, LittleEndianLayout) {
  const std::vector<NamedRecord> records{{"x", {1}, {1.0f}}};
  const auto bytes = encode_checkpoint(records);
  // magic, len=1, 'x', rank=1, dim=1, 1.0f = 0x3f800000
  const std::string expected("FRE1\x01\0\0\0x\x01\0\0\0\x01\0\0\0\0\0\x80\x3f", 21);
  EXPECT_EQ(bytes, expected);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const std::vector<NamedRecord> records{{"w", {4}, {1, 2, 3, 4}}};
  const auto bytes = encode_checkpoint(records);
  EXPECT_THROW(decode_checkpoint("NOPE"), FormatError);
  EXPECT_THROW(decode_checkpoint("FRE2"), FormatError);
  for (std::size_t cut = 5; cut < bytes.size(); ++cut)
    EXPECT_THROW(decode_checkpoint(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
  EXPECT_TRUE(decode_checkpoint("FRE1").empty());
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = fastre::testing::scratch_dir("checkpoint");
  const std::vector<NamedRecord> records{{"w", {2}, {0.5f, -0.5f}}};
  write_checkpoint_file(dir / "c.fre", records);
  EXPECT_EQ(read_checkpoint_file(dir / "c.fre"), records);
  EXPECT_FALSE(std::filesystem::exists(dir / "c.fre.tmp"));
  EXPECT_THROW(read_checkpoint_file(dir / "missing.fre"), ValidationError);
}

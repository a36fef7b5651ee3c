#include <gtest/gtest.h>

#include "fastre/encoder.hpp"
#include "fastre/errors.hpp"
#include "fastre/ops.hpp"
#include "test_support.hpp"

using namespace fastre;
using fastre::testing::max_abs_diff;
using fastre::testing::random_tensor;

namespace {

BlockParams random_block(std::size_t d, Rng& rng, bool gated = true) {
  BlockParams p{random_tensor({d, d, 3}, rng, 0.3), random_tensor({d}, rng, 0.3), {}, {}};
  if (gated) {
    p.conv_b_kernel = random_tensor({d, d, 3}, rng, 0.3);
    p.conv_b_bias = random_tensor({d}, rng, 0.3);
  }
  return p;
}

// Rows of x whose gradient is nonzero when backpropagating from row `row`
// of encode(x).
std::size_t dependency_width(const std::vector<std::size_t>& dilations, std::size_t n,
                             std::size_t row) {
  Rng rng(3);
  std::vector<BlockParams> blocks;
  for (std::size_t i = 0; i < dilations.size(); ++i) blocks.push_back(random_block(4, rng));
  auto x = random_tensor({n, 4}, rng, 1.0, true);
  Rng unused(0);
  const auto h = encode(x, blocks, dilations, BlockOptions{}, unused);
  backward(sum(slice_rows(h, row, row + 1)));
  std::size_t width = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t c = 0; c < 4; ++c) any = any || x.grad()[i * 4 + c] != 0;
    width += any;
  }
  return width;
}

}  // namespace

TEST(Embedding, PositionsRestartPerSegment) {
  Rng rng(1);
  EmbeddingParams p{random_tensor({3, 2}, rng), random_tensor({3}, rng), random_tensor({5, 3}, rng)};
  const auto v = random_tensor({5, 2}, rng);
  const auto packed = embed_vectors(v, p, std::vector<std::size_t>{2, 3});
  const auto first = embed_vectors(slice_rows(v, 0, 2), p);
  const auto second = embed_vectors(slice_rows(v, 2, 5), p);
  EXPECT_EQ(max_abs_diff(slice_rows(packed, 0, 2).data(), first.data()), 0.0);
  EXPECT_EQ(max_abs_diff(slice_rows(packed, 2, 5).data(), second.data()), 0.0);
  // row 0 = W v_0 + b + P[0]
  for (std::size_t o = 0; o < 3; ++o) {
    double want = p.projection_bias.at(o) + p.position.at(0, o);
    for (std::size_t c = 0; c < 2; ++c) want += p.projection_weight.at(o, c) * v.at(0, c);
    EXPECT_NEAR(first.at(0, o), want, 1e-6);
  }
  EXPECT_THROW(embed_vectors(random_tensor({6, 2}, rng), p), ValidationError);
}

TEST(Block, VariantsComputeDocumentedFormula) {
  Rng rng(2);
  const auto x = random_tensor({6, 4}, rng);
  const auto p = random_block(4, rng);
  Rng unused(0);
  const auto a = conv1d_dilated(x, p.conv_a_kernel, p.conv_a_bias, 2);
  const auto gate = sigmoid(conv1d_dilated(x, p.conv_b_kernel, p.conv_b_bias, 2));

  const auto full = block_forward(x, p, 2, BlockOptions{}, unused);
  EXPECT_LT(max_abs_diff(full.data(), add(mul(a, gate), x).data()), 1e-6);

  BlockOptions no_res;
  no_res.residual = false;
  EXPECT_LT(max_abs_diff(block_forward(x, p, 2, no_res, unused).data(), mul(a, gate).data()),
            1e-6);

  BlockOptions no_gate;
  no_gate.gated = false;
  const auto ungated = random_block(4, rng, false);
  const auto a2 = conv1d_dilated(x, ungated.conv_a_kernel, ungated.conv_a_bias, 2);
  EXPECT_LT(max_abs_diff(block_forward(x, ungated, 2, no_gate, unused).data(), add(a2, x).data()),
            1e-6);
  EXPECT_THROW(block_forward(x, ungated, 2, BlockOptions{}, unused), ValidationError);
}

TEST(Block, DropoutOnlyInTraining) {
  Rng rng(3);
  const auto x = random_tensor({6, 4}, rng);
  const auto p = random_block(4, rng);
  BlockOptions o;
  o.dropout_rate = 0.5;
  Rng r1(1);
  const auto eval = block_forward(x, p, 1, o, r1);
  o.training = true;
  Rng r2(1);
  const auto train = block_forward(x, p, 1, o, r2);
  std::size_t zeros = 0;
  for (auto v : train.data()) zeros += v == 0;
  EXPECT_GT(zeros, 0u);
  o.training = false;
  Rng r3(1);
  EXPECT_EQ(max_abs_diff(eval.data(), block_forward(x, p, 1, o, r3).data()), 0.0);
}

TEST(Encoder, ReceptiveFieldFormula) {
  const std::vector<std::size_t> dilated{1, 2, 4, 1, 1, 1};
  const std::vector<std::size_t> plain(6, 1);
  EXPECT_EQ(receptive_field(dilated, 3), 21u);
  EXPECT_EQ(receptive_field(plain, 3), 13u);
  EXPECT_EQ(receptive_field(std::vector<std::size_t>{1, 2, 4, 8}, 3), 31u);
  EXPECT_EQ(receptive_field(std::vector<std::size_t>{3}, 5), 13u);
}

TEST(Encoder, ImpulseProbeMatchesReceptiveField) {
  EXPECT_EQ(dependency_width({1, 2, 4, 1, 1, 1}, 40, 20), 21u);
  EXPECT_EQ(dependency_width({1, 1, 1, 1, 1, 1}, 40, 20), 13u);
  // Near the sentence start the window is clipped.
  EXPECT_EQ(dependency_width({1, 2, 4, 1, 1, 1}, 40, 0), 11u);
}

TEST(Encoder, PackedSegmentsAreIndependent) {
  Rng rng(4);
  std::vector<BlockParams> blocks{random_block(4, rng), random_block(4, rng)};
  const std::vector<std::size_t> dil{1, 4};
  const auto x = random_tensor({9, 4}, rng);
  Rng unused(0);
  const auto packed = encode(x, blocks, dil, BlockOptions{}, unused, std::vector<std::size_t>{5, 4});
  const auto a = encode(slice_rows(x, 0, 5), blocks, dil, BlockOptions{}, unused);
  const auto b = encode(slice_rows(x, 5, 9), blocks, dil, BlockOptions{}, unused);
  EXPECT_LT(max_abs_diff(slice_rows(packed, 0, 5).data(), a.data()), 1e-6);
  EXPECT_LT(max_abs_diff(slice_rows(packed, 5, 9).data(), b.data()), 1e-6);
  EXPECT_THROW(encode(x, blocks, std::vector<std::size_t>{1}, BlockOptions{}, unused),
               ValidationError);
}

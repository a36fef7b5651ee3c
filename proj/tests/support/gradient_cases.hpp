#pragma once

// Gradient checks for every differentiable operation, shared by the unit
// tests and the acceptance suite.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fastre/attention.hpp"
#include "fastre/encoder.hpp"
#include "fastre/loss.hpp"
#include "fastre/model.hpp"
#include "fastre/tagger.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

namespace fastre::testing {

using GradCase = std::pair<std::string, std::function<GradCheckResult()>>;

inline Model tiny_model(const Ablations& ablations = {}, std::uint64_t seed = 5) {
  ModelConfig cfg;
  cfg.encoder.hidden = 8;
  cfg.encoder.layers = 2;
  cfg.encoder.dilation_rates = {1, 2};
  cfg.encoder.dropout_rate = 0.0;
  cfg.encoder.max_len = 16;
  cfg.encoder.glove_dim = 6;
  cfg.type_dim = 4;
  cfg.ablations = ablations;
  auto map = TypeRelationMap::from_json(R"({"PER": ["works_for", "founded"], "ORG": ["based_in"]})");
  Vocabulary vocab({"alice", "acme", "paris", "works", "for", "in", "founded"});
  Rng rng(seed + 100);
  auto glove = random_tensor({vocab.size(), 6}, rng, 0.5);
  return create_model(cfg, map, vocab, glove, seed);
}

// "alice works for acme founded acme in paris" with a shared head and a
// second head type.
inline Example tiny_example() {
  Example ex;
  ex.tokens = {"alice", "works", "for", "acme", "founded", "acme", "in", "paris"};
  ex.triples = {{{0, 0}, 0, "works_for", {3, 3}},
                {{0, 0}, 0, "founded", {5, 5}},
                {{5, 5}, 2, "based_in", {7, 7}}};
  return ex;
}

inline std::vector<Tensor> trainable_leaves(const Model& m) {
  std::vector<Tensor> out;
  for (const auto& p : m.params.params())
    if (p.trainable) out.push_back(p.tensor);
  return out;
}

inline std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  auto add_case = [&](std::string name, std::function<GradCheckResult()> fn) {
    cases.emplace_back(std::move(name), std::move(fn));
  };

  add_case("elementwise (add, mul, scale, add_row_vector, sigmoid)", [] {
    Rng rng(1);
    auto a = random_tensor({3, 4}, rng, 1.0, true);
    auto b = random_tensor({3, 4}, rng, 1.0, true);
    auto v = random_tensor({4}, rng, 1.0, true);
    return grad_check("elementwise", [&] {
      return weighted_sum(sigmoid(add_row_vector(add(mul(a, b), scale(a, 0.7)), v)), 11);
    }, {a, b, v});
  });
  add_case("softmax_rows", [] {
    Rng rng(2);
    auto x = random_tensor({3, 5}, rng, 2.0, true);
    return grad_check("softmax", [&] { return weighted_sum(softmax_rows(x), 12); }, {x});
  });
  add_case("matmul, transpose, linear", [] {
    Rng rng(3);
    auto a = random_tensor({3, 4}, rng, 1.0, true);
    auto b = random_tensor({4, 2}, rng, 1.0, true);
    auto w = random_tensor({5, 2}, rng, 1.0, true);
    auto bias = random_tensor({5}, rng, 1.0, true);
    return grad_check("linear", [&] {
      return weighted_sum(linear(transpose(transpose(matmul(a, b))), w, bias), 13);
    }, {a, b, w, bias});
  });
  add_case("concat, slice, reshape, embedding_lookup", [] {
    Rng rng(4);
    auto t = random_tensor({5, 3}, rng, 1.0, true);
    auto x = random_tensor({4, 2}, rng, 1.0, true);
    const std::vector<std::int64_t> ids{4, 1, 4, 0};
    return grad_check("shape ops", [&] {
      const auto e = embedding_lookup(t, ids);
      const auto c = concat_last_dim({e, x});
      return weighted_sum(reshape(slice_rows(slice_cols(c, 1, 5), 1, 4), {4, 3}), 14);
    }, {t, x});
  });
  for (std::size_t dil : {1, 2, 4}) {
    add_case("conv1d_dilated, dilation " + std::to_string(dil), [dil] {
      Rng rng(20 + dil);
      auto x = random_tensor({12, 4}, rng, 1.0, true);
      auto k = random_tensor({3, 4, 3}, rng, 0.5, true);
      auto b = random_tensor({3}, rng, 0.5, true);
      const std::vector<std::size_t> segs{7, 5};
      return grad_check("conv", [&] {
        return weighted_sum(conv1d_dilated(x, k, b, dil, segs), 15);
      }, {x, k, b});
    });
  }
  add_case("gated residual block", [] {
    Rng rng(30);
    auto x = random_tensor({9, 4}, rng, 1.0, true);
    BlockParams p{random_tensor({4, 4, 3}, rng, 0.5, true), random_tensor({4}, rng, 0.5, true),
                  random_tensor({4, 4, 3}, rng, 0.5, true), random_tensor({4}, rng, 0.5, true)};
    Rng unused(0);
    const std::vector<std::size_t> segs{4, 5};
    return grad_check("block", [&] {
      return weighted_sum(block_forward(x, p, 2, BlockOptions{}, unused, segs), 16);
    }, {x, p.conv_a_kernel, p.conv_a_bias, p.conv_b_kernel, p.conv_b_bias});
  });
  add_case("embedding projection with positions", [] {
    Rng rng(31);
    auto v = random_tensor({6, 5}, rng, 1.0, true);
    EmbeddingParams p{random_tensor({4, 5}, rng, 0.5, true), random_tensor({4}, rng, 0.5, true),
                      random_tensor({8, 4}, rng, 0.5, true)};
    const std::vector<std::size_t> segs{2, 4};
    return grad_check("embed", [&] {
      return weighted_sum(embed_vectors(v, p, segs), 17);
    }, {v, p.projection_weight, p.projection_bias, p.position});
  });
  for (std::size_t heads : {1, 2}) {
    add_case("self-attention, " + std::to_string(heads) + " head(s)", [heads] {
      Rng rng(40 + heads);
      auto h = random_tensor({7, 4}, rng, 1.0, true);
      AttentionParams p;
      for (auto* w : {&p.wq, &p.wk, &p.wv}) *w = random_tensor({4, 4}, rng, 0.6, true);
      for (auto* b : {&p.bq, &p.bk, &p.bv}) *b = random_tensor({4}, rng, 0.3, true);
      const std::vector<std::size_t> segs{3, 4};
      return grad_check("attention", [&] {
        return weighted_sum(aux_features(h, p, heads, segs), 18);
      }, {h, p.wq, p.bq, p.wk, p.bk, p.wv, p.bv});
    });
  }
  add_case("head tagger linears", [] {
    Rng rng(50);
    auto h = random_tensor({5, 3}, rng, 1.0, true);
    auto hh = random_tensor({5, 3}, rng, 1.0, true);
    HeadTaggerParams p{random_tensor({5, 6}, rng, 0.5, true), random_tensor({5}, rng, 0.5, true),
                       random_tensor({5, 6}, rng, 0.5, true), random_tensor({5}, rng, 0.5, true)};
    return grad_check("head tagger", [&] {
      const auto s = score_head(h, hh, p);
      return add(weighted_sum(s.start, 19), weighted_sum(s.end, 20));
    }, {h, hh, p.start_weight, p.start_bias, p.end_weight, p.end_bias});
  });
  add_case("head features and tail tagger linears", [] {
    Rng rng(51);
    auto h = random_tensor({6, 3}, rng, 1.0, true);
    auto ht = random_tensor({6, 3}, rng, 1.0, true);
    HeadFeatureTables tables{random_tensor({4, 2}, rng, 0.5, true),
                             random_tensor({8, 3}, rng, 0.5, true)};
    // width 4d + d_t = 14, N = 3 relations
    TailTaggerParams p{random_tensor({4, 14}, rng, 0.5, true), random_tensor({4}, rng, 0.5, true),
                       random_tensor({4, 14}, rng, 0.5, true), random_tensor({4}, rng, 0.5, true)};
    const std::vector<std::size_t> relations{0, 2};
    return grad_check("tail tagger", [&] {
      const auto feature = head_features(h, TypedSpan{1, 3, 2, 0}, tables);
      const auto s = score_tail(h, ht, feature, p, relations);
      return add(weighted_sum(s.start, 21), weighted_sum(s.end, 22));
    }, {h, ht, tables.type_embed, tables.relpos_embed, p.start_weight, p.start_bias,
        p.end_weight, p.end_bias});
  });
  add_case("adaptive-threshold loss", [] {
    Rng rng(60);
    auto s = random_tensor({6, 5}, rng, 2.0, true);
    PositionLabels labels(6, 4);
    labels.set(0, 1);
    labels.set(2, 0);
    labels.set(2, 3);
    labels.set(5, 3);
    const std::vector<std::size_t> active{0, 1, 3};
    const auto mask = ColumnMask::for_classes(4, active);
    return grad_check("at_loss", [&] { return at_loss(s, labels, mask); }, {s});
  });
  add_case("global-threshold loss", [] {
    Rng rng(61);
    auto s = random_tensor({6, 5}, rng, 2.0, true);
    PositionLabels labels(6, 4);
    labels.set(1, 2);
    labels.set(4, 0);
    return grad_check("bce", [&] { return global_threshold_loss(s, labels); }, {s});
  });
  for (const char* variant : {"adaptive", "global_threshold", "no_mapping"}) {
    add_case(std::string("total loss, ") + variant, [variant] {
      Ablations ab;
      if (std::string(variant) != "adaptive") enable_ablation(ab, variant);
      Model m = tiny_model(ab);
      const std::vector<LabeledSentence> batch{prepare_sentence(m, tiny_example()),
                                               prepare_sentence(m, Example{{"paris", "acme"}, {}})};
      Tensor vectors;
      {
        NoGradGuard guard;
        std::vector<std::int64_t> ids = batch[0].ids;
        ids.insert(ids.end(), batch[1].ids.begin(), batch[1].ids.end());
        vectors = embedding_lookup(m.glove, ids).detach();
      }
      vectors.set_requires_grad(true);
      auto leaves = trainable_leaves(m);
      leaves.push_back(vectors);
      Rng unused(0);
      return grad_check("total_loss", [&] {
        return total_loss(m, batch, false, unused, &vectors);
      }, leaves, 16);
    });
  }
  return cases;
}

}  // namespace fastre::testing

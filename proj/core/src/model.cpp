#include "fastre/model.hpp"

#include <algorithm>
#include <cmath>

#include "fastre/errors.hpp"
#include "fastre/loss.hpp"
#include "fastre/ops.hpp"

FASTRE_BEGIN_NAMESPACE

namespace {

std::string block_prefix(std::size_t i) { return "encoder.block" + std::to_string(i + 1); }

void add_attention(ParamStore& store, const std::string& prefix, std::size_t d, Rng& rng) {
  for (const char* p : {"q", "k", "v"}) {
    store.add(prefix + ".w" + p, init_fan_in({d, d}, d, rng));
    store.add(prefix + ".b" + p, Tensor::zeros({d}));
  }
}

AttentionParams attention_view(ParamStore& store, const std::string& prefix) {
  return {store.get(prefix + ".wq"), store.get(prefix + ".bq"), store.get(prefix + ".wk"),
          store.get(prefix + ".bk"), store.get(prefix + ".wv"), store.get(prefix + ".bv")};
}

std::vector<std::size_t> lengths_of(std::span<const std::vector<std::int64_t>> ids) {
  std::vector<std::size_t> lengths;
  lengths.reserve(ids.size());
  for (const auto& s : ids) lengths.push_back(s.size());
  return lengths;
}

Tensor boundary_loss(const Model& model, const Tensor& start, const Tensor& end,
                     const PositionLabels& start_labels, const PositionLabels& end_labels,
                     const ColumnMask& mask) {
  if (model.adaptive_threshold()) return cascade_loss(start, end, start_labels, end_labels, mask);
  return add(global_threshold_loss(start, start_labels, mask),
             global_threshold_loss(end, end_labels, mask));
}

std::vector<Tag> decode(const Model& model, const Tensor& scores, const ColumnMask& mask) {
  if (model.adaptive_threshold()) return decode_positions(scores, mask);
  return decode_positions_global(scores, model.config.global_threshold, mask);
}

std::vector<std::vector<std::int64_t>> sentence_ids(
    const Model& model, std::span<const std::vector<std::string>> sentences,
    ExtractStats* stats) {
  std::vector<std::vector<std::int64_t>> ids;
  ids.reserve(sentences.size());
  const std::size_t max_len = model.config.encoder.max_len;
  for (const auto& tokens : sentences) {
    const std::size_t n = std::min(tokens.size(), max_len);
    if (stats && tokens.size() > max_len) ++stats->truncated;
    ids.push_back(model.vocab.ids(std::span(tokens).first(n)));
  }
  return ids;
}

}  // namespace

BlockOptions Model::block_options(bool training) const {
  BlockOptions o;
  o.gated = !config.ablations.no_gate;
  o.residual = !config.ablations.no_residual;
  o.dropout_rate = config.encoder.dropout_rate;
  o.training = training;
  return o;
}

Model create_model(ModelConfig config, TypeRelationMap type_map, Vocabulary vocab,
                   Tensor glove_table, std::uint64_t seed) {
  config.validate();
  const auto& enc = config.encoder;
  if (glove_table.rank() != 2 || glove_table.dim(0) != vocab.size() ||
      glove_table.dim(1) != enc.glove_dim) {
    throw ShapeError("embedding table " + shape_string(glove_table.shape()) + " does not match [" +
                     std::to_string(vocab.size()) + ", " + std::to_string(enc.glove_dim) + "]");
  }
  const std::size_t d = enc.hidden;
  const std::size_t k = enc.kernel_size;
  const std::size_t types = kEntityTypeCount;
  const std::size_t relations = type_map.relation_count();
  const std::size_t dt = config.type_dim;

  Model m;
  m.config = std::move(config);
  m.type_map = std::move(type_map);
  m.vocab = std::move(vocab);
  Rng rng(seed);
  auto& s = m.params;

  s.add("embed.glove", glove_table.detach(), false);
  s.add("embed.proj.weight", init_fan_in({d, enc.glove_dim}, enc.glove_dim, rng));
  s.add("embed.proj.bias", Tensor::zeros({d}));
  s.add("embed.position", init_uniform({enc.max_len, d}, 0.1, rng));

  for (std::size_t i = 0; i < enc.layers; ++i) {
    const auto p = block_prefix(i);
    s.add(p + ".conv_a.kernel", init_fan_in({d, d, k}, d * k, rng));
    s.add(p + ".conv_a.bias", Tensor::zeros({d}));
    if (!m.config.ablations.no_gate) {
      s.add(p + ".conv_b.kernel", init_fan_in({d, d, k}, d * k, rng));
      s.add(p + ".conv_b.bias", Tensor::zeros({d}));
    }
  }

  add_attention(s, "attn_head", d, rng);
  add_attention(s, "attn_tail", d, rng);

  for (const char* b : {"head_start", "head_end"}) {
    s.add(std::string("tagger.") + b + ".weight", init_fan_in({types + 1, 2 * d}, 2 * d, rng));
    s.add(std::string("tagger.") + b + ".bias", Tensor::zeros({types + 1}));
  }
  s.add("tagger.type_embed", init_uniform({types, dt}, 0.1, rng));
  s.add("tagger.relpos_embed", init_uniform({enc.max_len, d}, 0.1, rng));
  const std::size_t tail_in = 4 * d + dt;
  for (const char* b : {"tail_start", "tail_end"}) {
    s.add(std::string("tagger.") + b + ".weight",
          init_fan_in({relations + 1, tail_in}, tail_in, rng));
    s.add(std::string("tagger.") + b + ".bias", Tensor::zeros({relations + 1}));
  }
  bind_views(m);
  return m;
}

void bind_views(Model& m) {
  auto& s = m.params;
  m.glove = s.get("embed.glove");
  m.embedding = {s.get("embed.proj.weight"), s.get("embed.proj.bias"), s.get("embed.position")};
  m.blocks.clear();
  for (std::size_t i = 0; i < m.config.encoder.layers; ++i) {
    const auto p = block_prefix(i);
    BlockParams b{s.get(p + ".conv_a.kernel"), s.get(p + ".conv_a.bias"), {}, {}};
    if (!m.config.ablations.no_gate) {
      b.conv_b_kernel = s.get(p + ".conv_b.kernel");
      b.conv_b_bias = s.get(p + ".conv_b.bias");
    }
    m.blocks.push_back(std::move(b));
  }
  m.attn_head = attention_view(s, "attn_head");
  m.attn_tail = attention_view(s, "attn_tail");
  m.head_tagger = {s.get("tagger.head_start.weight"), s.get("tagger.head_start.bias"),
                   s.get("tagger.head_end.weight"), s.get("tagger.head_end.bias")};
  m.head_tables = {s.get("tagger.type_embed"), s.get("tagger.relpos_embed")};
  m.tail_tagger = {s.get("tagger.tail_start.weight"), s.get("tagger.tail_start.bias"),
                   s.get("tagger.tail_end.weight"), s.get("tagger.tail_end.bias")};
}

Model clone_model(const Model& model) {
  Model m;
  m.config = model.config;
  m.type_map = model.type_map;
  m.vocab = model.vocab;
  for (const auto& p : model.params.params()) {
    m.params.add(p.name, p.tensor.detach(), p.trainable);
    auto& q = m.params.param(p.name);
    q.first_moment = p.first_moment;
    q.second_moment = p.second_moment;
    q.step = p.step;
  }
  bind_views(m);
  return m;
}

EncodedBatch encode_batch(const Model& model, std::span<const std::vector<std::int64_t>> ids,
                          bool training, Rng& rng, const Tensor* word_vectors) {
  EncodedBatch out;
  out.lengths = lengths_of(ids);
  std::size_t total = 0;
  for (auto n : out.lengths) {
    if (n == 0) throw ValidationError("encode_batch: empty sentence");
    out.offsets.push_back(total);
    total += n;
  }
  Tensor x;
  if (word_vectors) {
    if (word_vectors->rank() != 2 || word_vectors->dim(0) != total) {
      throw ShapeError("encode_batch: word vectors " + shape_string(word_vectors->shape()) +
                       " for " + std::to_string(total) + " tokens");
    }
    x = embed_vectors(*word_vectors, model.embedding, out.lengths);
  } else {
    std::vector<std::int64_t> flat;
    flat.reserve(total);
    for (const auto& s : ids) flat.insert(flat.end(), s.begin(), s.end());
    x = embed_input(flat, model.glove, model.embedding, out.lengths);
  }
  const auto dilations = model.config.effective_dilations();
  out.h = encode(x, model.blocks, dilations, model.block_options(training), rng, out.lengths);
  const std::size_t heads = model.config.attention_heads;
  out.h_head = aux_features(out.h, model.attn_head, heads, out.lengths);
  out.h_tail = aux_features(out.h, model.attn_tail, heads, out.lengths);
  return out;
}

LabeledSentence prepare_sentence(const Model& model, const Example& example) {
  const Example ex = truncate_example(example, model.config.encoder.max_len);
  return {model.vocab.ids(ex.tokens), build_labels(ex, model.type_map, model.mapping_enabled())};
}

Tensor total_loss(const Model& model, std::span<const LabeledSentence> batch, bool training,
                  Rng& rng, const Tensor* word_vectors) {
  if (batch.empty()) throw ValidationError("total_loss: empty batch");
  std::vector<std::vector<std::int64_t>> ids;
  ids.reserve(batch.size());
  for (const auto& s : batch) ids.push_back(s.ids);
  const auto enc = encode_batch(model, ids, training, rng, word_vectors);
  const auto heads = score_head(enc.h, enc.h_head, model.head_tagger);
  const auto tokens = tail_token_scores(enc.h, enc.h_tail, model.tail_tagger);

  Tensor total;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t lo = enc.offsets[b];
    const std::size_t hi = lo + enc.lengths[b];
    const auto& labels = batch[b].labels;
    Tensor l = boundary_loss(model, slice_rows(heads.start, lo, hi),
                             slice_rows(heads.end, lo, hi), labels.head_start,
                             labels.head_end, {});
    if (!labels.tails.empty()) {
      const TailTokenScores sentence{slice_rows(tokens.start, lo, hi),
                                     slice_rows(tokens.end, lo, hi)};
      for (const auto& tl : labels.tails) {
        const auto feature = head_features(enc.h, tl.head, model.head_tables, lo);
        const auto relations =
            potential_relations(tl.head.type, model.type_map, model.mapping_enabled());
        const auto ts = score_tail_with_head(sentence, feature, model.tail_tagger, relations);
        l = add(l, boundary_loss(model, ts.start, ts.end, tl.start, tl.end, ts.mask));
      }
    }
    total = total.defined() ? add(total, l) : l;
  }
  return scale(total, Real(1) / static_cast<Real>(batch.size()));
}

std::vector<std::vector<Triple>> extract_batch(const Model& model,
                                               std::span<const std::vector<std::string>> sentences,
                                               ExtractStats* stats) {
  std::vector<std::vector<Triple>> out(sentences.size());
  if (sentences.empty()) return out;
  NoGradGuard no_grad;
  const auto ids = sentence_ids(model, sentences, stats);
  if (stats) stats->sentences += sentences.size();

  // Empty sentences produce no triples and are left out of the packed batch.
  std::vector<std::size_t> kept;
  std::vector<std::vector<std::int64_t>> packed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) continue;
    kept.push_back(i);
    packed.push_back(ids[i]);
  }
  if (packed.empty()) return out;

  Rng unused(0);
  const auto enc = encode_batch(model, packed, false, unused);
  const auto heads = score_head(enc.h, enc.h_head, model.head_tagger);
  const auto tokens = tail_token_scores(enc.h, enc.h_tail, model.tail_tagger);

  for (std::size_t b = 0; b < kept.size(); ++b) {
    const std::size_t lo = enc.offsets[b];
    const std::size_t n = enc.lengths[b];
    const auto starts = decode(model, slice_rows(heads.start, lo, lo + n), {});
    const auto ends = decode(model, slice_rows(heads.end, lo, lo + n), {});
    const auto spans = pair_spans(starts, ends, n);
    if (stats) stats->head_spans += spans.size();
    if (spans.empty()) continue;

    const TailTokenScores sentence{slice_rows(tokens.start, lo, lo + n),
                                   slice_rows(tokens.end, lo, lo + n)};
    auto& triples = out[kept[b]];
    for (const auto& head : spans) {
      const auto relations =
          potential_relations(head.type, model.type_map, model.mapping_enabled());
      if (relations.empty()) continue;
      const auto feature = head_features(enc.h, head, model.head_tables, lo);
      const auto ts = score_tail_with_head(sentence, feature, model.tail_tagger, relations);
      if (stats) {
        ++stats->tail_passes;
        stats->active_tail_columns += relations.size() + 1;
      }
      const auto tail_starts = decode(model, ts.start, ts.mask);
      const auto tail_ends = decode(model, ts.end, ts.mask);
      for (const auto& tail : pair_spans(tail_starts, tail_ends, n)) {
        Triple t{head, tail.type, Span{tail.start, tail.end}, std::min(head.score, tail.score)};
        if (std::find(triples.begin(), triples.end(), t) == triples.end()) triples.push_back(t);
      }
    }
  }
  return out;
}

std::vector<Triple> extract(const Model& model, const std::vector<std::string>& tokens,
                            ExtractStats* stats) {
  return std::move(extract_batch(model, std::span(&tokens, 1), stats).front());
}

std::vector<BoundaryScores> head_scores_batch(
    const Model& model, std::span<const std::vector<std::string>> sentences) {
  NoGradGuard no_grad;
  const auto ids = sentence_ids(model, sentences, nullptr);
  Rng unused(0);
  const auto enc = encode_batch(model, ids, false, unused);
  const auto heads = score_head(enc.h, enc.h_head, model.head_tagger);
  std::vector<BoundaryScores> out;
  for (std::size_t b = 0; b < ids.size(); ++b) {
    const std::size_t lo = enc.offsets[b];
    const std::size_t hi = lo + enc.lengths[b];
    out.push_back({slice_rows(heads.start, lo, hi), slice_rows(heads.end, lo, hi)});
  }
  return out;
}

FASTRE_END_NAMESPACE

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fastre/attention.hpp"
#include "fastre/config.hpp"
#include "fastre/data.hpp"
#include "fastre/encoder.hpp"
#include "fastre/params.hpp"
#include "fastre/rng.hpp"
#include "fastre/tagger.hpp"
#include "fastre/type_map.hpp"

FASTRE_BEGIN_NAMESPACE

/// Every tensor of the extractor. `params` owns the storage (including the
/// frozen "embed.glove" table); the structured members are handles into it.
struct Model {
  ModelConfig config;
  TypeRelationMap type_map;
  Vocabulary vocab;
  ParamStore params;

  Tensor glove;  // [V, glove_dim], frozen
  EmbeddingParams embedding;
  std::vector<BlockParams> blocks;
  AttentionParams attn_head;
  AttentionParams attn_tail;
  HeadTaggerParams head_tagger;
  HeadFeatureTables head_tables;
  TailTaggerParams tail_tagger;

  bool mapping_enabled() const { return !config.ablations.no_mapping; }
  bool adaptive_threshold() const { return !config.ablations.global_threshold; }
  BlockOptions block_options(bool training) const;
};

/// Allocates and initializes every parameter from `seed`:
/// weights and conv kernels uniform in +-sqrt(1/fan_in), biases zero,
/// position/type/relative-position tables uniform in +-0.1.
Model create_model(ModelConfig config, TypeRelationMap type_map, Vocabulary vocab,
                   Tensor glove_table, std::uint64_t seed);

// Independent copy of every tensor, including optimizer state.
Model clone_model(const Model& model);

// Re-points the structured handles at the tensors in model.params.
void bind_views(Model& model);

/// Packed encoder output for several sentences: rows of sentence s live in
/// [offsets[s], offsets[s] + lengths[s]).
struct EncodedBatch {
  Tensor h;
  Tensor h_head;
  Tensor h_tail;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> offsets;
};

/// Runs embedding, encoder and both attention layers over a packed batch.
/// `word_vectors`, when given, replaces the frozen-table lookup (one row per
/// packed token) so gradients w.r.t. the input vectors can be taken.
EncodedBatch encode_batch(const Model& model, std::span<const std::vector<std::int64_t>> ids,
                          bool training, Rng& rng, const Tensor* word_vectors = nullptr);

struct LabeledSentence {
  std::vector<std::int64_t> ids;
  LabelTensors labels;
};

// Truncates to max_len, maps tokens to ids and builds the tagging labels.
LabeledSentence prepare_sentence(const Model& model, const Example& example);

/// Mean over the batch of [head tagging loss + one tail tagging loss per
/// distinct gold head (teacher forcing)]. Uses the rank-based AT loss, or
/// per-matrix BCE under the global-threshold ablation.
Tensor total_loss(const Model& model, std::span<const LabeledSentence> batch, bool training,
                  Rng& rng, const Tensor* word_vectors = nullptr);

struct ExtractStats {
  std::size_t sentences = 0;
  std::size_t truncated = 0;     // sentences cut to max_len
  std::size_t head_spans = 0;
  std::size_t tail_passes = 0;   // heads whose R' was non-empty
  std::size_t active_tail_columns = 0;  // sum over passes of |R'| + 1
};

/// Full cascade for each sentence (tokens are looked up as given; longer
/// sentences are truncated to max_len): encode, decode typed heads, then for
/// each head build w^h, restrict to R', decode and pair tails.
std::vector<std::vector<Triple>> extract_batch(const Model& model,
                                               std::span<const std::vector<std::string>> sentences,
                                               ExtractStats* stats = nullptr);
std::vector<Triple> extract(const Model& model, const std::vector<std::string>& tokens,
                            ExtractStats* stats = nullptr);

// Head start/end score matrices of every sentence, computed as one packed batch.
std::vector<BoundaryScores> head_scores_batch(
    const Model& model, std::span<const std::vector<std::string>> sentences);

FASTRE_END_NAMESPACE

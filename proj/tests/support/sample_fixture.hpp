#pragma once

// The bundled sample corpus with its map and word vectors.

#include <string>
#include <vector>

#include "fastre/data.hpp"
#include "fastre/glove.hpp"
#include "fastre/model.hpp"
#include "fastre/type_map.hpp"
#include "test_support.hpp"

namespace fastre::testing {

struct SampleData {
  std::vector<Example> corpus;
  TypeRelationMap map;
  GloveTable glove;
  Vocabulary vocab;
  Tensor table;
};

inline const SampleData& sample_data() {
  static const SampleData data = [] {
    SampleData d;
    const auto dir = sample_dir();
    d.corpus = load_corpus(dir / "corpus.jsonl");
    d.map = TypeRelationMap::load(dir / "type_map.json");
    d.glove = load_glove(dir / "glove.txt", 300);
    d.vocab = build_vocab(d.corpus, d.glove);
    d.table = build_embedding_table(d.vocab, d.glove);
    return d;
  }();
  return data;
}

inline std::vector<std::vector<std::string>> sample_sentences() {
  std::vector<std::vector<std::string>> out;
  for (const auto& ex : sample_data().corpus) out.push_back(ex.tokens);
  return out;
}

inline Model sample_model(const ModelConfig& config = {}, std::uint64_t seed = 13) {
  const auto& d = sample_data();
  return create_model(config, d.map, d.vocab, d.table, seed);
}

// hidden 16, two blocks: fast enough for unit tests.
inline ModelConfig small_config() {
  ModelConfig cfg;
  cfg.encoder.hidden = 16;
  cfg.encoder.layers = 2;
  cfg.encoder.dilation_rates = {1, 2};
  cfg.type_dim = 8;
  return cfg;
}

}  // namespace fastre::testing

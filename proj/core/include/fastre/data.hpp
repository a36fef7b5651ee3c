#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastre/glove.hpp"
#include "fastre/loss.hpp"
#include "fastre/tagger.hpp"
#include "fastre/tensor.hpp"
#include "fastre/type_map.hpp"

FASTRE_BEGIN_NAMESPACE

struct GoldTriple {
  Span head;
  std::size_t head_type = 0;  // index into kEntityTypes
  std::string relation;
  Span tail;

  bool operator==(const GoldTriple&) const = default;
};

struct Example {
  std::vector<std::string> tokens;
  std::vector<GoldTriple> triples;
};

// Lowercased whitespace tokens.
std::vector<std::string> tokenize(std::string_view text);

struct CorpusOptions {
  std::size_t max_len = 100;
  // Skip invalid lines (recording them) instead of throwing on the first one.
  bool skip_invalid = false;
};

struct CorpusReport {
  std::size_t lines = 0;
  std::size_t dropped_triples = 0;  // spans beyond the truncation window
  std::vector<std::string> errors;  // "line N: reason", skip mode only
};

/// One JSON object per line:
///   {"text": "...", "triples": [{"head": [s, e], "head_type": "PER",
///                                "relation": "...", "tail": [s, e]}]}
/// Spans are inclusive whitespace-token indices. Blank lines are ignored.
std::vector<Example> parse_corpus(std::string_view text, const CorpusOptions& options = {},
                                  CorpusReport* report = nullptr);
std::vector<Example> load_corpus(const std::filesystem::path& path,
                                 const CorpusOptions& options = {},
                                 CorpusReport* report = nullptr);

/// Token -> id. Id 0 is UNK; the remaining ids follow lexicographic order.
class Vocabulary {
 public:
  static constexpr std::int64_t kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() = default;
  // Sorts and deduplicates; never contains the UNK token itself.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::int64_t id(const std::string& token) const;
  std::vector<std::int64_t> ids(std::span<const std::string> tokens) const;
  std::size_t size() const { return words_.size() + 1; }
  // Known tokens, in id order starting at id 1.
  const std::vector<std::string>& words() const { return words_; }

  std::string to_json() const;
  static Vocabulary from_json(std::string_view text);

  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::int64_t, std::less<>> index_;
};

// Keeps the first max_len tokens and the triples that still fit.
Example truncate_example(const Example& example, std::size_t max_len);

// Corpus tokens that have a GloVe vector, plus UNK.
Vocabulary build_vocab(std::span<const Example> corpus, const GloveTable& glove);

// [V, glove_dim]; row 0 (UNK) is the mean of every GloVe row.
Tensor build_embedding_table(const Vocabulary& vocab, const GloveTable& glove);

struct TailLabels {
  TypedSpan head;  // gold head (score unused)
  PositionLabels start;
  PositionLabels end;
};

struct LabelTensors {
  PositionLabels head_start;  // n x K
  PositionLabels head_end;
  std::vector<TailLabels> tails;  // one per distinct gold head, n x N each
};

/// Head labels keyed by type, tail labels keyed by relation per distinct gold
/// head. With mapping enabled a relation outside its head type's set is a
/// ValidationError; unknown relation names always are.
LabelTensors build_labels(const Example& example, const TypeRelationMap& map,
                          bool mapping_enabled = true);

// Gold triples of an example as Triples (head score 0).
std::vector<Triple> gold_triples(const Example& example, const TypeRelationMap& map);

FASTRE_END_NAMESPACE

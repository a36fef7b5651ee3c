#pragma once

// Cascade binary tagging: typed head-entity boundaries first, then tail
// boundaries per relation conditioned on one head. Score matrices have one
// column per class plus a trailing adaptive-threshold (AT) column.

#include <compare>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "fastre/tensor.hpp"

FASTRE_BEGIN_NAMESPACE

/// Active columns of a [n, C+1] score matrix. An empty mask means every
/// column is active; the AT column is always active.
struct ColumnMask {
  std::vector<std::uint8_t> active;

  static ColumnMask for_classes(std::size_t class_count,
                                std::span<const std::size_t> classes);
  bool is_active(std::size_t column) const {
    return active.empty() || active[column] != 0;
  }
  std::size_t active_count(std::size_t width) const;
};

struct HeadTaggerParams {
  Tensor start_weight, start_bias;  // [K+1, 2d], [K+1]
  Tensor end_weight, end_bias;
};

struct TailTaggerParams {
  Tensor start_weight, start_bias;  // [N+1, 4d + d_t], [N+1]
  Tensor end_weight, end_bias;
};

struct HeadFeatureTables {
  Tensor type_embed;    // [K, d_t]
  Tensor relpos_embed;  // [max_len, d]
};

struct BoundaryScores {
  Tensor start;
  Tensor end;
};

// Row i of each output = W [w_i, w_i^h] + b.
BoundaryScores score_head(const Tensor& h, const Tensor& h_head,
                          const HeadTaggerParams& params);

struct Tag {
  std::size_t position = 0;
  std::size_t cls = 0;
  Real margin = 0;  // how far the class cleared its threshold

  auto operator<=>(const Tag& o) const {
    return std::tie(position, cls) <=> std::tie(o.position, o.cls);
  }
  bool operator==(const Tag& o) const { return position == o.position && cls == o.cls; }
};

// Every (i, j) with S[i, j] > S[i, AT] (strict) over active non-AT columns,
// sorted by (position, class).
std::vector<Tag> decode_positions(const Tensor& scores, const ColumnMask& mask = {});

// Global-threshold variant: sigmoid(S[i, j]) > tau; the AT column is ignored.
std::vector<Tag> decode_positions_global(const Tensor& scores, double tau,
                                         const ColumnMask& mask = {});

struct TypedSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::size_t type = 0;
  Real score = 0;       // min of the start and end margins

  bool operator==(const TypedSpan& o) const {
    return start == o.start && end == o.end && type == o.type;
  }
};

/// Per class, scanning starts left to right: a start takes the nearest end of
/// the same class at position >= start and strictly before that class's next
/// start. Unpaired starts and ends are dropped. Output sorted by (start, type).
std::vector<TypedSpan> pair_spans(std::span<const Tag> starts, std::span<const Tag> ends,
                                  std::size_t length);

/// w^h = [w_a + V_p[a], w_b + V_p[b], V_t[type]] for span (a, b). `row_offset`
/// locates the sentence inside a packed H.
Tensor head_features(const Tensor& h, const TypedSpan& span,
                     const HeadFeatureTables& tables, std::size_t row_offset = 0);

// Token-dependent half of the tail scores, [n, N+1] each, shared by every
// head of a sentence.
struct TailTokenScores {
  Tensor start;
  Tensor end;
};
TailTokenScores tail_token_scores(const Tensor& h, const Tensor& h_tail,
                                  const TailTaggerParams& params);

struct TailScores {
  Tensor start;
  Tensor end;
  ColumnMask mask;
};

/// Adds the head-feature term W[:, 2d:] w^h + b to the token scores
/// and masks every relation outside `relations`.
TailScores score_tail_with_head(const TailTokenScores& tokens, const Tensor& head_feature,
                                const TailTaggerParams& params,
                                std::span<const std::size_t> relations);

// Full scoring over [w_i, w_i^t, w^h], equivalent to the two steps above.
TailScores score_tail(const Tensor& h, const Tensor& h_tail, const Tensor& head_feature,
                      const TailTaggerParams& params,
                      std::span<const std::size_t> relations);

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct Triple {
  TypedSpan head;
  std::size_t relation = 0;
  Span tail;
  Real score = 0;

  bool operator==(const Triple& o) const {
    return head == o.head && relation == o.relation && tail == o.tail;
  }
};

FASTRE_END_NAMESPACE

#include "fastre/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fastre/errors.hpp"
#include "fastre/ops.hpp"

FASTRE_BEGIN_NAMESPACE

ColumnMask ColumnMask::for_classes(std::size_t class_count,
                                   std::span<const std::size_t> classes) {
  ColumnMask mask;
  mask.active.assign(class_count + 1, 0);
  for (auto c : classes) {
    if (c >= class_count) throw ValidationError("mask class " + std::to_string(c) + " out of range");
    mask.active[c] = 1;
  }
  mask.active[class_count] = 1;
  return mask;
}

std::size_t ColumnMask::active_count(std::size_t width) const {
  if (active.empty()) return width;
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), 1));
}

BoundaryScores score_head(const Tensor& h, const Tensor& h_head,
                          const HeadTaggerParams& params) {
  const Tensor features = concat_last_dim({h, h_head});
  return {linear(features, params.start_weight, params.start_bias),
          linear(features, params.end_weight, params.end_bias)};
}

namespace {

void check_mask(const Tensor& scores, const ColumnMask& mask) {
  if (scores.rank() != 2 || scores.dim(1) < 1) {
    throw ShapeError("decode: scores must be [n, C+1], got " + shape_string(scores.shape()));
  }
  if (!mask.active.empty() && mask.active.size() != scores.dim(1)) {
    throw ShapeError("decode: mask width " + std::to_string(mask.active.size()) +
                     " vs " + std::to_string(scores.dim(1)) + " score columns");
  }
}

}  // namespace

std::vector<Tag> decode_positions(const Tensor& scores, const ColumnMask& mask) {
  check_mask(scores, mask);
  const std::size_t n = scores.dim(0);
  const std::size_t width = scores.dim(1);
  const std::size_t at = width - 1;
  const auto s = scores.data();
  std::vector<Tag> tags;
  for (std::size_t i = 0; i < n; ++i) {
    const Real threshold = s[i * width + at];
    for (std::size_t j = 0; j < at; ++j) {
      if (!mask.is_active(j)) continue;
      const Real v = s[i * width + j];
      if (v > threshold) tags.push_back({i, j, v - threshold});
    }
  }
  return tags;
}

std::vector<Tag> decode_positions_global(const Tensor& scores, double tau,
                                         const ColumnMask& mask) {
  check_mask(scores, mask);
  const std::size_t n = scores.dim(0);
  const std::size_t width = scores.dim(1);
  const auto s = scores.data();
  std::vector<Tag> tags;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      if (!mask.is_active(j)) continue;
      const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(s[i * width + j])));
      if (p > tau) tags.push_back({i, j, static_cast<Real>(p - tau)});
    }
  }
  return tags;
}

std::vector<TypedSpan> pair_spans(std::span<const Tag> starts, std::span<const Tag> ends,
                                  std::size_t length) {
  std::map<std::size_t, std::vector<Tag>> starts_by_class;
  std::map<std::size_t, std::vector<Tag>> ends_by_class;
  for (const auto& t : starts)
    if (t.position < length) starts_by_class[t.cls].push_back(t);
  for (const auto& t : ends)
    if (t.position < length) ends_by_class[t.cls].push_back(t);

  std::vector<TypedSpan> spans;
  for (auto& [cls, cls_starts] : starts_by_class) {
    auto& cls_ends = ends_by_class[cls];
    std::sort(cls_starts.begin(), cls_starts.end());
    std::sort(cls_ends.begin(), cls_ends.end());
    for (std::size_t s = 0; s < cls_starts.size(); ++s) {
      const std::size_t begin = cls_starts[s].position;
      const std::size_t limit =
          s + 1 < cls_starts.size() ? cls_starts[s + 1].position : length;
      const auto it = std::lower_bound(
          cls_ends.begin(), cls_ends.end(), begin,
          [](const Tag& t, std::size_t pos) { return t.position < pos; });
      if (it == cls_ends.end() || it->position >= limit) continue;
      spans.push_back({begin, it->position, cls, std::min(cls_starts[s].margin, it->margin)});
    }
  }
  std::sort(spans.begin(), spans.end(), [](const TypedSpan& a, const TypedSpan& b) {
    return std::tie(a.start, a.type, a.end) < std::tie(b.start, b.type, b.end);
  });
  return spans;
}

Tensor head_features(const Tensor& h, const TypedSpan& span, const HeadFeatureTables& tables,
                     std::size_t row_offset) {
  if (span.start > span.end || row_offset + span.end >= h.dim(0)) {
    throw ValidationError("head_features: span [" + std::to_string(span.start) + ", " +
                          std::to_string(span.end) + "] outside the sentence");
  }
  if (span.end >= tables.relpos_embed.dim(0) || span.type >= tables.type_embed.dim(0)) {
    throw ValidationError("head_features: span position or type outside embedding tables");
  }
  const std::int64_t rows[2] = {static_cast<std::int64_t>(row_offset + span.start),
                                static_cast<std::int64_t>(row_offset + span.end)};
  const std::int64_t positions[2] = {static_cast<std::int64_t>(span.start),
                                     static_cast<std::int64_t>(span.end)};
  const std::int64_t type[1] = {static_cast<std::int64_t>(span.type)};
  // [2, d]: boundary tokens plus their position rows, flattened to [2d].
  const Tensor boundary =
      add(embedding_lookup(h, rows), embedding_lookup(tables.relpos_embed, positions));
  const std::size_t d = h.dim(1);
  const Tensor type_row = embedding_lookup(tables.type_embed, type);
  return concat_last_dim({reshape(boundary, {2 * d}),
                          reshape(type_row, {tables.type_embed.dim(1)})});
}

TailTokenScores tail_token_scores(const Tensor& h, const Tensor& h_tail,
                                  const TailTaggerParams& params) {
  const Tensor features = concat_last_dim({h, h_tail});
  const std::size_t width = features.dim(1);
  return {linear(features, slice_cols(params.start_weight, 0, width)),
          linear(features, slice_cols(params.end_weight, 0, width))};
}

TailScores score_tail_with_head(const TailTokenScores& tokens, const Tensor& head_feature,
                                const TailTaggerParams& params,
                                std::span<const std::size_t> relations) {
  const std::size_t feature_width = head_feature.numel();
  const std::size_t total = params.start_weight.dim(1);
  if (feature_width > total) throw ShapeError("score_tail: head feature wider than weights");
  const std::size_t classes = params.start_weight.dim(0);
  const Tensor row = reshape(head_feature, {1, feature_width});
  auto head_term = [&](const Tensor& weight, const Tensor& bias) {
    return reshape(linear(row, slice_cols(weight, total - feature_width, total), bias),
                   {classes});
  };
  TailScores out;
  out.start = add_row_vector(tokens.start, head_term(params.start_weight, params.start_bias));
  out.end = add_row_vector(tokens.end, head_term(params.end_weight, params.end_bias));
  out.mask = ColumnMask::for_classes(classes - 1, relations);
  return out;
}

TailScores score_tail(const Tensor& h, const Tensor& h_tail, const Tensor& head_feature,
                      const TailTaggerParams& params, std::span<const std::size_t> relations) {
  return score_tail_with_head(tail_token_scores(h, h_tail, params), head_feature, params,
                              relations);
}

FASTRE_END_NAMESPACE

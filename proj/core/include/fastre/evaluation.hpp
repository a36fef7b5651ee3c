#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fastre/tagger.hpp"

FASTRE_BEGIN_NAMESPACE

enum class MatchMode {
  // Relation plus the last token of both the head and the tail span.
  partial,
  // Relation plus both full spans.
  exact,
};

struct EvalResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // {"precision", "recall", "f1", "tp", "fp", "fn"}
  std::string to_json() const;
};

// 2PR / (P + R), 0 when P + R == 0.
double f1_score(double precision, double recall);

/// Micro-averaged P/R/F1 over aligned per-sentence prediction and gold lists.
/// Triples are compared by their match key; duplicate keys count once.
EvalResult evaluate(std::span<const std::vector<Triple>> predicted,
                    std::span<const std::vector<Triple>> gold,
                    MatchMode mode = MatchMode::partial);

FASTRE_END_NAMESPACE

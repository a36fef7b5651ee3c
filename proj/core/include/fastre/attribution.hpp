#pragma once

#include <string>
#include <vector>

#include "fastre/model.hpp"

FASTRE_BEGIN_NAMESPACE

struct TokenAttribution {
  std::string token;
  double norm = 0.0;        // L2 norm of d(loss)/d(word vector)
  double normalized = 0.0;  // norm / max norm, 0 when every norm is 0
};

/// Per-token gradient norms of total_loss w.r.t. the input word vectors.
/// The loss targets are the example's triples, or the model's own
/// extractions when it has none. Dropout is off. Parameter gradients are
/// left zeroed.
std::vector<TokenAttribution> gradient_attribution(const Model& model, const Example& example);

FASTRE_END_NAMESPACE

#include "fastre/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "fastre/errors.hpp"
#include "fastre/ops.hpp"

FASTRE_BEGIN_NAMESPACE

namespace {

void clear_param_grads(const Model& model) {
  for (const auto& p : model.params.params()) {
    Tensor handle = p.tensor;
    handle.zero_grad();
  }
}

}  // namespace

std::vector<TokenAttribution> gradient_attribution(const Model& model, const Example& example) {
  if (example.tokens.empty()) throw ValidationError("attribution needs a non-empty sentence");
  Example target = truncate_example(example, model.config.encoder.max_len);
  if (target.triples.empty()) {
    for (const auto& t : extract(model, target.tokens)) {
      target.triples.push_back({Span{t.head.start, t.head.end}, t.head.type,
                                model.type_map.relation_name(t.relation), t.tail});
    }
  }
  const auto sentence = prepare_sentence(model, target);

  Tensor vectors;
  {
    NoGradGuard no_grad;
    vectors = embedding_lookup(model.glove, sentence.ids).detach();
  }
  vectors.set_requires_grad(true);

  clear_param_grads(model);
  Rng unused(0);
  const std::vector<LabeledSentence> batch{sentence};
  backward(total_loss(model, batch, false, unused, &vectors));
  clear_param_grads(model);

  const std::size_t n = target.tokens.size();
  const std::size_t dim = vectors.dim(1);
  const auto grad = vectors.grad();
  std::vector<TokenAttribution> out(n);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double g = grad.empty() ? 0.0 : grad[i * dim + c];
      sq += g * g;
    }
    out[i].token = target.tokens[i];
    out[i].norm = std::sqrt(sq);
    max_norm = std::max(max_norm, out[i].norm);
  }
  for (auto& a : out) a.normalized = max_norm > 0.0 ? a.norm / max_norm : 0.0;
  return out;
}

FASTRE_END_NAMESPACE

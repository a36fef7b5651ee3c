#include "fastre/evaluation.hpp"

#include <array>
#include <set>

#include <json.hpp>

#include "fastre/errors.hpp"

FASTRE_BEGIN_NAMESPACE

namespace {

using Key = std::array<std::size_t, 5>;

Key match_key(const Triple& t, MatchMode mode) {
  if (mode == MatchMode::partial) return {t.head.end, t.relation, t.tail.end, 0, 0};
  return {t.head.start, t.head.end, t.relation, t.tail.start, t.tail.end};
}

std::set<Key> key_set(const std::vector<Triple>& triples, MatchMode mode) {
  std::set<Key> keys;
  for (const auto& t : triples) keys.insert(match_key(t, mode));
  return keys;
}

}  // namespace

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

EvalResult evaluate(std::span<const std::vector<Triple>> predicted,
                    std::span<const std::vector<Triple>> gold, MatchMode mode) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("evaluate: " + std::to_string(predicted.size()) +
                          " predicted sentences vs " + std::to_string(gold.size()) + " gold");
  }
  EvalResult r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto p = key_set(predicted[i], mode);
    const auto g = key_set(gold[i], mode);
    std::size_t hit = 0;
    for (const auto& k : p) hit += g.count(k);
    r.tp += hit;
    r.fp += p.size() - hit;
    r.fn += g.size() - hit;
  }
  const auto tp = static_cast<double>(r.tp);
  // Nothing predicted and nothing to find counts as a perfect score.
  const double empty = r.fp == 0 && r.fn == 0 ? 1.0 : 0.0;
  r.precision = r.tp + r.fp > 0 ? tp / static_cast<double>(r.tp + r.fp) : empty;
  r.recall = r.tp + r.fn > 0 ? tp / static_cast<double>(r.tp + r.fn) : empty;
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

std::string EvalResult::to_json() const {
  nlohmann::ordered_json j;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["tp"] = tp;
  j["fp"] = fp;
  j["fn"] = fn;
  return j.dump();
}

FASTRE_END_NAMESPACE

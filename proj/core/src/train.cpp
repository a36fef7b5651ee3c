#include "fastre/train.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fastre/errors.hpp"
#include "fastre/optim.hpp"

FASTRE_BEGIN_NAMESPACE

namespace {

constexpr std::size_t kEvalChunk = 128;
constexpr std::uint64_t kTrainStream = 0x9e3779b97f4a7c15ULL;

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw ValidationError("warmup_fraction must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ValidationError("val_fraction must lie in [0, 1)");
  }
}

std::string EpochMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = loss;
  j["lr"] = lr;
  j["f1"] = f1;
  return j.dump();
}

double scheduled_lr(std::size_t step, std::size_t total_steps, double base,
                    double warmup_fraction) {
  if (total_steps == 0 || step >= total_steps) return 0.0;
  const double s = static_cast<double>(step);
  const double t = static_cast<double>(total_steps);
  const double warmup = warmup_fraction * t;
  if (s < warmup) return base * s / warmup;
  return base * (t - s) / (t - warmup);
}

std::size_t steps_per_epoch(std::size_t examples, std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  return (examples + batch_size - 1) / batch_size;
}

EvalResult evaluate_model(const Model& model, std::span<const Example> corpus, MatchMode mode) {
  std::vector<std::vector<Triple>> predicted;
  std::vector<std::vector<Triple>> gold;
  predicted.reserve(corpus.size());
  gold.reserve(corpus.size());
  for (std::size_t lo = 0; lo < corpus.size(); lo += kEvalChunk) {
    const std::size_t hi = std::min(corpus.size(), lo + kEvalChunk);
    std::vector<std::vector<std::string>> tokens;
    for (std::size_t i = lo; i < hi; ++i) tokens.push_back(corpus[i].tokens);
    for (auto& p : extract_batch(model, tokens)) predicted.push_back(std::move(p));
    for (std::size_t i = lo; i < hi; ++i) {
      gold.push_back(
          gold_triples(truncate_example(corpus[i], model.config.encoder.max_len), model.type_map));
    }
  }
  return evaluate(predicted, gold, mode);
}

TrainResult train(Model model, std::span<const Example> corpus, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (corpus.empty()) throw ValidationError("training corpus is empty");

  Rng rng(config.seed ^ kTrainStream);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<Example> train_split;
  std::vector<Example> val_split;
  if (config.val_fraction > 0.0) {
    rng.shuffle(std::span(order));
    auto held = static_cast<std::size_t>(
        std::ceil(config.val_fraction * static_cast<double>(corpus.size())));
    held = std::min(held, corpus.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < held ? val_split : train_split).push_back(corpus[order[i]]);
    }
  } else {
    train_split.assign(corpus.begin(), corpus.end());
  }

  std::vector<LabeledSentence> prepared;
  prepared.reserve(train_split.size());
  for (const auto& ex : train_split) prepared.push_back(prepare_sentence(model, ex));

  TrainResult result{std::move(model), {}, 0, 0, std::nullopt, std::nullopt};
  Model& m = result.model;
  result.steps_per_epoch = steps_per_epoch(prepared.size(), config.batch_size);
  result.total_steps = result.steps_per_epoch * config.epochs;

  AdamWOptions opts;
  opts.weight_decay = config.weight_decay;
  std::optional<Model> best;
  double best_f1 = -1.0;
  std::size_t step = 0;
  std::vector<std::size_t> batch_order(prepared.size());
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span(batch_order));
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t lo = 0; lo < batch_order.size(); lo += config.batch_size) {
      const std::size_t hi = std::min(batch_order.size(), lo + config.batch_size);
      std::vector<LabeledSentence> batch;
      batch.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(prepared[batch_order[i]]);

      ++step;
      m.params.zero_grad();
      const Tensor loss = total_loss(m, batch, true, rng);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw RuntimeFailure("loss diverged at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(step));
      }
      loss_sum += value;
      lr = scheduled_lr(step, result.total_steps, config.lr, config.warmup_fraction);
      if (lr > 0.0) {
        backward(loss);
        opts.lr = lr;
        adamw_step(m.params, opts);
      }
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.loss = loss_sum / static_cast<double>(result.steps_per_epoch);
    metrics.lr = lr;
    metrics.f1 = evaluate_model(m, val_split.empty() ? train_split : val_split).f1;
    result.log.push_back(metrics);
    if (on_epoch) on_epoch(metrics);

    if (!val_split.empty() && metrics.f1 > best_f1) {
      best_f1 = metrics.f1;
      best = clone_model(m);
    }
    if (metrics.f1 >= 1.0 && !result.first_perfect_epoch) {
      result.first_perfect_epoch = epoch;
      result.first_perfect_step = step;
      if (config.stop_when_perfect) break;
    }
  }
  if (best) result.model = std::move(*best);
  return result;
}

FASTRE_END_NAMESPACE

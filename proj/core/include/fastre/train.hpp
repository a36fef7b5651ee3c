#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fastre/evaluation.hpp"
#include "fastre/model.hpp"

FASTRE_BEGIN_NAMESPACE

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double warmup_fraction = 0.06;
  double weight_decay = 0.01;
  std::uint64_t seed = 13;
  // Fraction of the corpus held out for checkpoint selection; 0 keeps the
  // final-epoch weights.
  double val_fraction = 0.0;
  // Stop after the first epoch whose reported F1 reaches 1.0.
  bool stop_when_perfect = false;

  // Throws ValidationError when an invariant fails.
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean batch loss
  double lr = 0.0;        // rate of the epoch's last update
  double f1 = 0.0;        // partial match, validation split if any else train

  // {"epoch", "loss", "lr", "f1"}
  std::string to_json() const;
};

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> log;
  std::size_t steps_per_epoch = 0;
  std::size_t total_steps = 0;
  std::optional<std::size_t> first_perfect_epoch;
  // Optimizer steps taken when F1 first reached 1.0.
  std::optional<std::size_t> first_perfect_step;
};

/// Piecewise-linear rate for 1-based update `step` of `total_steps`:
/// ramps from 0 to `base` over the first warmup_fraction * total_steps steps,
/// then decays linearly to 0 at total_steps.
double scheduled_lr(std::size_t step, std::size_t total_steps, double base,
                    double warmup_fraction);

// ceil(examples / batch_size)
std::size_t steps_per_epoch(std::size_t examples, std::size_t batch_size);

/// Partial (or exact) match scores of the model's extractions on `corpus`.
EvalResult evaluate_model(const Model& model, std::span<const Example> corpus,
                          MatchMode mode = MatchMode::partial);

/// Seeded minibatch AdamW training. Each epoch reshuffles the training split,
/// and every update uses scheduled_lr; an update whose rate is 0 is skipped.
/// Throws RuntimeFailure as soon as a batch loss is not finite.
TrainResult train(Model model, std::span<const Example> corpus, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

FASTRE_END_NAMESPACE

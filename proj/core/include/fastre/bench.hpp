#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fastre/model.hpp"

FASTRE_BEGIN_NAMESPACE

/// Trainable element counts, in total and per top-level name group
/// ("embed", "encoder", "attn_head", "attn_tail", "tagger").
struct ParamCount {
  std::size_t total = 0;
  std::map<std::string, std::size_t> groups;
};
ParamCount count_params(const Model& model);

struct BenchOptions {
  std::vector<std::size_t> batch_sizes{1, 8, 128};
  std::size_t repetitions = 3;
  std::size_t warmup_batches = 3;
  // > 1 adds a worker-pool pass reported separately from the single-thread one.
  std::size_t threads = 1;
  // Training-step timing at this batch size; 0 disables it.
  std::size_t iteration_batch = 32;
};

struct BatchTiming {
  std::size_t batch_size = 0;
  double ms_per_instance = 0.0;  // median over repetitions
  double total_seconds = 0.0;    // one pass over the corpus, median repetition
  std::vector<double> repetition_ms;  // per-instance ms of every repetition
};

struct BenchReport {
  std::size_t instances = 0;
  std::size_t parameter_count = 0;
  std::vector<BatchTiming> single_thread;
  std::size_t threads = 1;
  std::vector<BatchTiming> parallel;
  std::optional<double> iteration_ms;  // forward + backward + update

  std::string to_json() const;
};

/// Times extraction over `sentences` in their given order at each batch
/// size, after `warmup_batches` untimed batches. An empty corpus produces a
/// report with no timings.
BenchReport benchmark(const Model& model, std::span<const std::vector<std::string>> sentences,
                      const BenchOptions& options = {});

FASTRE_END_NAMESPACE

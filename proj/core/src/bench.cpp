#include "fastre/bench.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <thread>

#include <json.hpp>

#include "fastre/errors.hpp"
#include "fastre/optim.hpp"

FASTRE_BEGIN_NAMESPACE

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

using Sentences = std::span<const std::vector<std::string>>;

void run_batches(const Model& model, Sentences sentences, std::size_t batch) {
  for (std::size_t lo = 0; lo < sentences.size(); lo += batch) {
    const std::size_t n = std::min(batch, sentences.size() - lo);
    extract_batch(model, sentences.subspan(lo, n));
  }
}

// Contiguous batches are dealt round-robin to the workers.
void run_parallel(const Model& model, Sentences sentences, std::size_t batch,
                  std::size_t threads) {
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t lo = t * batch; lo < sentences.size(); lo += threads * batch) {
          const std::size_t n = std::min(batch, sentences.size() - lo);
          extract_batch(model, sentences.subspan(lo, n));
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Repetitions are interleaved across batch sizes so that slow drift in
// machine load affects every batch size alike.
template <class Fn>
std::vector<BatchTiming> time_batch_sizes(Sentences sentences, const BenchOptions& opts,
                                          Fn&& pass) {
  std::vector<BatchTiming> timings;
  for (auto b : opts.batch_sizes) {
    BatchTiming t;
    t.batch_size = b;
    timings.push_back(t);
    for (std::size_t w = 0; w < opts.warmup_batches; ++w) {
      const std::size_t lo = (w * b) % sentences.size();
      pass(sentences.subspan(lo, std::min(b, sentences.size() - lo)), b);
    }
  }
  std::vector<std::vector<double>> totals(timings.size());
  for (std::size_t r = 0; r < opts.repetitions; ++r) {
    for (std::size_t i = 0; i < timings.size(); ++i) {
      const auto start = Clock::now();
      pass(sentences, timings[i].batch_size);
      const double ms = elapsed_ms(start);
      totals[i].push_back(ms);
      timings[i].repetition_ms.push_back(ms / static_cast<double>(sentences.size()));
    }
  }
  for (std::size_t i = 0; i < timings.size(); ++i) {
    const double total = median(totals[i]);
    timings[i].total_seconds = total / 1000.0;
    timings[i].ms_per_instance = total / static_cast<double>(sentences.size());
  }
  return timings;
}

std::optional<double> iteration_time(const Model& model, Sentences sentences,
                                     const BenchOptions& opts) {
  const std::size_t n = std::min(opts.iteration_batch, sentences.size());
  Model scratch = clone_model(model);
  std::vector<LabeledSentence> batch;
  for (std::size_t i = 0; i < n; ++i) {
    if (sentences[i].empty()) continue;
    batch.push_back(prepare_sentence(scratch, Example{sentences[i], {}}));
  }
  if (batch.empty()) return std::nullopt;
  Rng rng(0);
  AdamWOptions adam;
  auto step = [&] {
    scratch.params.zero_grad();
    backward(total_loss(scratch, batch, true, rng));
    adamw_step(scratch.params, adam);
  };
  step();
  std::vector<double> times;
  for (std::size_t r = 0; r < std::max<std::size_t>(opts.repetitions, 1); ++r) {
    const auto start = Clock::now();
    step();
    times.push_back(elapsed_ms(start));
  }
  return median(times);
}

}  // namespace

ParamCount count_params(const Model& model) {
  ParamCount c;
  for (const auto& p : model.params.params()) {
    if (!p.trainable) continue;
    const auto n = p.tensor.numel();
    c.total += n;
    c.groups[p.name.substr(0, p.name.find('.'))] += n;
  }
  return c;
}

BenchReport benchmark(const Model& model, Sentences sentences, const BenchOptions& options) {
  if (options.repetitions == 0) throw ValidationError("repetitions must be >= 1");
  for (auto b : options.batch_sizes)
    if (b == 0) throw ValidationError("batch sizes must be >= 1");
  if (options.threads == 0) throw ValidationError("threads must be >= 1");

  BenchReport report;
  report.instances = sentences.size();
  report.parameter_count = count_params(model).total;
  report.threads = options.threads;
  if (sentences.empty()) return report;

  report.single_thread = time_batch_sizes(
      sentences, options, [&](Sentences s, std::size_t b) { run_batches(model, s, b); });
  if (options.threads > 1) {
    report.parallel = time_batch_sizes(sentences, options, [&](Sentences s, std::size_t b) {
      run_parallel(model, s, b, options.threads);
    });
  }
  if (options.iteration_batch > 0) report.iteration_ms = iteration_time(model, sentences, options);
  return report;
}

std::string BenchReport::to_json() const {
  using nlohmann::ordered_json;
  auto timings = [](const std::vector<BatchTiming>& list) {
    ordered_json a = ordered_json::array();
    for (const auto& t : list) {
      ordered_json j;
      j["batch_size"] = t.batch_size;
      j["ms_per_instance"] = t.ms_per_instance;
      j["total_seconds"] = t.total_seconds;
      j["repetition_ms_per_instance"] = t.repetition_ms;
      a.push_back(std::move(j));
    }
    return a;
  };
  ordered_json j;
  j["instances"] = instances;
  j["parameter_count"] = parameter_count;
  j["single_thread"] = timings(single_thread);
  if (!parallel.empty()) {
    j["threads"] = threads;
    j["parallel"] = timings(parallel);
  }
  j["iteration_ms"] = iteration_ms ? ordered_json(*iteration_ms) : ordered_json(nullptr);
  return j.dump();
}

FASTRE_END_NAMESPACE

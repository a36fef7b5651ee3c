#include <benchmark/benchmark.h>

#include "fastre/attention.hpp"
#include "fastre/model.hpp"
#include "fastre/ops.hpp"
#include "sample_fixture.hpp"

using namespace fastre;
using namespace fastre::testing;

namespace {

// n tokens of width 128 through one dilated conv, untraced.
void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dilation = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const auto x = random_tensor({n, 128}, rng);
  const auto k = random_tensor({128, 128, 3}, rng, 0.1);
  const auto b = random_tensor({128}, rng, 0.1);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(conv1d_dilated(x, k, b, dilation).data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvForward)->Args({32, 1})->Args({32, 4})->Args({1024, 1})->Args({1024, 4});

void BM_ConvTrainingStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto x = random_tensor({n, 128}, rng, 1.0, true);
  auto k = random_tensor({128, 128, 3}, rng, 0.1, true);
  const auto b = random_tensor({128}, rng, 0.1, true);
  for (auto _ : state) {
    k.zero_grad();
    backward(sum(conv1d_dilated(x, k, b, 2)));
    benchmark::DoNotOptimize(k.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConvTrainingStep)->Arg(32)->Arg(512);

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto heads = static_cast<std::size_t>(state.range(1));
  Rng rng(3);
  const auto h = random_tensor({n, 128}, rng);
  AttentionParams p;
  for (auto* w : {&p.wq, &p.wk, &p.wv}) *w = random_tensor({128, 128}, rng, 0.1);
  for (auto* v : {&p.bq, &p.bk, &p.bv}) *v = Tensor::zeros({128});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(aux_features(h, p, heads).data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Attention)->Args({16, 1})->Args({64, 1})->Args({64, 4});

// Default-size model over the sample sentences, in chunks of range(0).
void BM_Extract(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto model = sample_model();
  std::vector<std::vector<std::string>> sentences;
  while (sentences.size() < 128)
    for (const auto& s : sample_sentences()) sentences.push_back(s);
  sentences.resize(128);
  for (auto _ : state) {
    for (std::size_t lo = 0; lo < sentences.size(); lo += batch) {
      const std::span<const std::vector<std::string>> chunk(
          sentences.data() + lo, std::min(batch, sentences.size() - lo));
      benchmark::DoNotOptimize(extract_batch(model, chunk));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sentences.size()));
}
BENCHMARK(BM_Extract)->Arg(1)->Arg(8)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

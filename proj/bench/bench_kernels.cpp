// Serial reference versus OpenMP kernels over a synthetic corpus.

#include <benchmark/benchmark.h>

#include "triage/kernels.hpp"
#include "triage/synthetic.hpp"

namespace {

using namespace triage;

const Corpus& corpus() {
  static const Corpus c = synthetic::generate({.count = 2000, .seed = 3});
  return c;
}

std::vector<std::string_view> model_texts() {
  std::vector<std::string_view> out;
  for (const auto& r : corpus().reports()) out.push_back(r.model_text);
  return out;
}

std::vector<std::string_view> raw_texts() {
  std::vector<std::string_view> out;
  for (const auto& r : corpus().reports()) out.push_back(r.raw_text);
  return out;
}

features::LogisticModel model() {
  features::LogisticModel m;
  for (std::size_t i = 0; i < m.weights.size(); ++i) m.weights[i] = static_cast<double>(i % 7) - 3.0;
  return m;
}

void BM_Probabilities(benchmark::State& state) {
  const auto texts = model_texts();
  const auto m = model();
  for (auto _ : state) {
    auto p = state.range(0) ? kernels::bug_probabilities(m, texts) : kernels::serial::bug_probabilities(m, texts);
    benchmark::DoNotOptimize(p);
  }
}

void BM_Embeddings(benchmark::State& state) {
  const auto texts = model_texts();
  for (auto _ : state) {
    auto e = state.range(0) ? kernels::hashed_embeddings(texts, features::kEmbeddingDim)
                            : kernels::serial::hashed_embeddings(texts, features::kEmbeddingDim);
    benchmark::DoNotOptimize(e);
  }
}

void BM_Distances(benchmark::State& state) {
  const auto texts = model_texts();
  const auto all = kernels::serial::hashed_embeddings(texts, features::kEmbeddingDim);
  const std::vector<Embedding> sources(all.begin(), all.begin() + 50);
  for (auto _ : state) {
    auto d = state.range(0) ? kernels::squared_distances(sources, all) : kernels::serial::squared_distances(sources, all);
    benchmark::DoNotOptimize(d);
  }
}

void BM_EffortScores(benchmark::State& state) {
  const auto texts = raw_texts();
  for (auto _ : state) {
    auto s = state.range(0) ? kernels::effort_scores(texts) : kernels::serial::effort_scores(texts);
    benchmark::DoNotOptimize(s);
  }
}

}  // namespace

// Argument 0 runs the serial reference, 1 the parallel kernel.
BENCHMARK(BM_Probabilities)->Arg(0)->Arg(1);
BENCHMARK(BM_Embeddings)->Arg(0)->Arg(1);
BENCHMARK(BM_Distances)->Arg(0)->Arg(1);
BENCHMARK(BM_EffortScores)->Arg(0)->Arg(1);

BENCHMARK_MAIN();

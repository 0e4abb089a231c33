#include <benchmark/benchmark.h>

#include "relevancy/pairgen.hpp"
#include "relevancy/toy_corpus.hpp"
#include "relevancy/trainer.hpp"

namespace {

using namespace relevancy;

const toy::ToyCorpus& corpus() {
  static const toy::ToyCorpus c = toy::make_toy_corpus();
  return c;
}

// Replicates the toy contexts so the matrix is large enough to time.
std::vector<TopicContext> contexts(std::size_t copies) {
  std::vector<TopicContext> out;
  for (std::size_t k = 0; k < copies; ++k) {
    for (auto c : corpus().contexts) {
      c.id += "-" + std::to_string(k);
      c.description += " " + std::to_string(k);
      out.push_back(std::move(c));
    }
  }
  return out;
}

void BM_SimilaritySerial(benchmark::State& state) {
  const auto ctx = contexts(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(topic_similarity(ctx, trigram_jaccard, Execution::serial));
  }
  state.SetItemsProcessed(static_cast<long>(state.iterations() * ctx.size() * ctx.size() / 2));
}

void BM_SimilarityParallel(benchmark::State& state) {
  const auto ctx = contexts(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(topic_similarity(ctx, trigram_jaccard, Execution::parallel));
  }
  state.SetItemsProcessed(static_cast<long>(state.iterations() * ctx.size() * ctx.size() / 2));
}

std::vector<EncodedPair> encoded(const EncoderBackend& backend) {
  std::vector<EncodedPair> out;
  for (const auto& c : corpus().contexts) {
    for (const auto& t : corpus().texts) {
      out.push_back(encode_pair(c.description, t.text, backend.tokenizer(), 256));
      if (out.size() >= 20000) return out;
    }
  }
  return out;
}

void BM_ScoreSerial(benchmark::State& state) {
  BagOfEmbeddingsBackend backend;
  backend.reset(1);
  const auto pairs = encoded(backend);
  for (auto _ : state) benchmark::DoNotOptimize(backend.score_batch_serial(pairs));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pairs.size()));
}

void BM_ScoreParallel(benchmark::State& state) {
  BagOfEmbeddingsBackend backend;
  backend.reset(1);
  const auto pairs = encoded(backend);
  for (auto _ : state) benchmark::DoNotOptimize(backend.score_batch(pairs));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pairs.size()));
}

}  // namespace

BENCHMARK(BM_SimilaritySerial)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimilarityParallel)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

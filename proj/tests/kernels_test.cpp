#include <gtest/gtest.h>

#include <cmath>

#include "relevancy/kernels.hpp"
#include "relevancy/pairgen.hpp"
#include "relevancy/random.hpp"
#include "relevancy/toy_corpus.hpp"
#include "relevancy/trainer.hpp"

namespace relevancy {
namespace {

TEST(Kernels, TrigramsShortStringsAndUtf8) {
  EXPECT_EQ(kernels::char_trigrams("ab").size(), 1u);
  EXPECT_TRUE(kernels::char_trigrams("").empty());
  EXPECT_NE(kernels::char_trigrams("ab"), kernels::char_trigrams("abc"));
  // Three code points, six bytes: one gram.
  EXPECT_EQ(kernels::char_trigrams("ééé").size(), 1u);
  EXPECT_EQ(kernels::char_trigrams("aaaa").size(), 1u);
  EXPECT_EQ(kernels::char_trigrams("abcd").size(), 2u);
}

TEST(Kernels, JaccardEdgeCases) {
  const std::vector<std::uint64_t> empty, a = {1, 2, 3}, b = {3, 4};
  EXPECT_DOUBLE_EQ(kernels::jaccard(empty, empty), 1.0);
  EXPECT_DOUBLE_EQ(kernels::jaccard(a, empty), 0.0);
  EXPECT_DOUBLE_EQ(kernels::jaccard(a, b), 0.25);
}

TEST(Kernels, FillSymmetricSerialEqualsParallel) {
  SplitMix64 rng(5);
  const std::size_t n = 57;
  std::vector<double> values(n * n);
  for (auto& v : values) v = rng.uniform();
  const kernels::PairScorer scorer = [&](std::size_t i, std::size_t j) {
    return values[i * n + j];
  };
  std::vector<double> s(n * n), p(n * n);
  kernels::fill_symmetric_serial(n, scorer, s);
  kernels::fill_symmetric_parallel(n, scorer, p);
  EXPECT_EQ(s, p);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(s[i * n + i], 1.0);
    for (std::size_t j = i + 1; j < n; ++j) EXPECT_EQ(s[i * n + j], s[j * n + i]);
  }
}

TEST(Kernels, MapIndicesSerialEqualsParallel) {
  const std::size_t n = 1000;
  std::vector<double> s(n), p(n);
  const auto f = [](std::size_t i) { return std::sin(static_cast<double>(i)); };
  kernels::map_indices_serial(n, f, s);
  kernels::map_indices_parallel(n, f, p);
  EXPECT_EQ(s, p);
  EXPECT_GE(kernels::max_threads(), 1);
}

TEST(Kernels, SimilarityMatrixSerialEqualsParallel) {
  const auto corpus = toy::make_toy_corpus();
  const auto ser = topic_similarity(corpus.contexts, {}, Execution::serial);
  const auto par = topic_similarity(corpus.contexts, {}, Execution::parallel);
  EXPECT_EQ(ser.scores(), par.scores());
}

TEST(Kernels, BatchScoringSerialEqualsParallel) {
  const auto corpus = toy::make_toy_corpus();
  BagOfEmbeddingsBackend backend;
  backend.reset(3);
  std::vector<EncodedPair> pairs;
  for (std::size_t i = 0; i < corpus.texts.size(); ++i) {
    const auto& c = corpus.contexts[i % corpus.contexts.size()];
    pairs.push_back(encode_pair(c.description, corpus.texts[i].text,
                                backend.tokenizer(), 256));
  }
  const auto s = backend.score_batch_serial(pairs);
  const auto p = backend.score_batch(pairs);
  EXPECT_EQ(s, p);
  for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(s[i], backend.score(pairs[i]));
}

}  // namespace
}  // namespace relevancy

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relevancy/corpus.hpp"

namespace relevancy {

class SimilarityMatrix {
 public:
  SimilarityMatrix(std::vector<std::string> ids, std::vector<double> scores);

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  double at(std::size_t i, std::size_t j) const { return scores_[i * size() + j]; }
  double at(std::string_view a, std::string_view b) const;
  std::size_t index_of(std::string_view id) const;
  const std::vector<double>& scores() const { return scores_; }

 private:
  std::vector<std::string> ids_;
  std::vector<double> scores_;
};

struct NegativeBudget {
  std::size_t negatives_per_text = 3;
  double hard_fraction = 0.5;
  double hard_stratum_quantile = 0.25;

  void validate() const;
};

// Similarity of two context descriptions; must return values in [0, 1] and
// 1.0 on identical descriptions. Called concurrently.
using DescriptionScorer =
    std::function<double(std::string_view, std::string_view)>;

// Character 3-gram Jaccard over normalized descriptions.
double trigram_jaccard(std::string_view a, std::string_view b);

enum class Execution { serial, parallel };

// Uses the precomputed-trigram fast path when `scorer` is empty.
SimilarityMatrix topic_similarity(std::span<const TopicContext> contexts,
                                  const DescriptionScorer& scorer = {},
                                  Execution exec = Execution::parallel);

// Non-target contexts ordered by similarity to `target` descending, ties by id
// ascending. The first hard_stratum_size() entries form the hard stratum.
std::vector<std::string> rank_by_similarity(std::string_view target,
                                            const SimilarityMatrix& matrix);
std::size_t hard_stratum_size(std::size_t non_target_count, double quantile);

std::vector<TopicContext> sample_negative_contexts(
    const TopicContext& target, const ContextRegistry& registry,
    const SimilarityMatrix& matrix, const NegativeBudget& budget,
    std::uint64_t seed);

std::vector<PairExample> build_candidate_pairs(
    std::span<const TextSample> texts,
    const std::map<std::string, std::string>& topic_of_text,
    const ContextRegistry& registry, const SimilarityMatrix& matrix,
    const NegativeBudget& budget, std::uint64_t seed);

// topic_of_text built from each sample's topic_id.
std::map<std::string, std::string> topics_from_samples(
    std::span<const TextSample> texts);

}  // namespace relevancy

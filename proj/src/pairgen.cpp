#include "relevancy/pairgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relevancy/errors.hpp"
#include "relevancy/kernels.hpp"
#include "relevancy/random.hpp"

namespace relevancy {

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> ids,
                                   std::vector<double> scores)
    : ids_(std::move(ids)), scores_(std::move(scores)) {
  if (scores_.size() != ids_.size() * ids_.size()) {
    throw ConfigError("similarity matrix shape does not match id count");
  }
}

std::size_t SimilarityMatrix::index_of(std::string_view id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) {
    throw ConfigError("context '" + std::string(id) +
                      "' is not in the similarity matrix");
  }
  return static_cast<std::size_t>(it - ids_.begin());
}

double SimilarityMatrix::at(std::string_view a, std::string_view b) const {
  return at(index_of(a), index_of(b));
}

void NegativeBudget::validate() const {
  if (!(hard_fraction >= 0.0 && hard_fraction <= 1.0)) {
    throw ConfigError("hard_fraction must lie in [0, 1]");
  }
  if (!(hard_stratum_quantile > 0.0 && hard_stratum_quantile < 1.0)) {
    throw ConfigError("hard_stratum_quantile must lie in (0, 1)");
  }
}

double trigram_jaccard(std::string_view a, std::string_view b) {
  const auto ga = kernels::char_trigrams(normalize_text(a));
  const auto gb = kernels::char_trigrams(normalize_text(b));
  return kernels::jaccard(ga, gb);
}

SimilarityMatrix topic_similarity(std::span<const TopicContext> contexts,
                                  const DescriptionScorer& scorer,
                                  Execution exec) {
  if (contexts.empty()) {
    throw ConfigError("topic_similarity needs at least one context");
  }
  const std::size_t n = contexts.size();
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& c : contexts) {
    if (normalize_text(c.description).empty()) {
      throw ConfigError("context '" + c.id + "' has an empty description");
    }
    ids.push_back(c.id);
  }

  std::vector<double> scores(n * n);
  kernels::PairScorer pair_scorer;
  std::vector<std::vector<std::uint64_t>> grams;
  if (scorer) {
    pair_scorer = [&](std::size_t i, std::size_t j) {
      return std::clamp(scorer(contexts[i].description, contexts[j].description),
                        0.0, 1.0);
    };
  } else {
    grams.reserve(n);
    for (const auto& c : contexts) {
      grams.push_back(kernels::char_trigrams(normalize_text(c.description)));
    }
    pair_scorer = [&](std::size_t i, std::size_t j) {
      return kernels::jaccard(grams[i], grams[j]);
    };
  }
  if (exec == Execution::parallel) {
    kernels::fill_symmetric_parallel(n, pair_scorer, scores);
  } else {
    kernels::fill_symmetric_serial(n, pair_scorer, scores);
  }
  return SimilarityMatrix(std::move(ids), std::move(scores));
}

std::vector<std::string> rank_by_similarity(std::string_view target,
                                            const SimilarityMatrix& matrix) {
  const std::size_t t = matrix.index_of(target);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (i != t) idx.push_back(i);
  }
  const auto& ids = matrix.ids();
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double sa = matrix.at(t, a), sb = matrix.at(t, b);
    if (sa != sb) return sa > sb;
    return ids[a] < ids[b];
  });
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(ids[i]);
  return out;
}

std::size_t hard_stratum_size(std::size_t non_target_count, double quantile) {
  return static_cast<std::size_t>(
      std::llround(quantile * static_cast<double>(non_target_count)));
}

namespace {

// Draws `count` distinct members uniformly; returns them in draw order.
std::vector<std::string> draw(std::vector<std::string> pool, std::size_t count,
                              SplitMix64& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

std::vector<TopicContext> sample_negative_contexts(
    const TopicContext& target, const ContextRegistry& registry,
    const SimilarityMatrix& matrix, const NegativeBudget& budget,
    std::uint64_t seed) {
  budget.validate();
  const std::size_t k = budget.negatives_per_text;
  if (k == 0) return {};

  const auto ranked = rank_by_similarity(target.id, matrix);
  if (ranked.size() < k) {
    throw SamplingError("need " + std::to_string(k) +
                        " negative contexts for '" + target.id + "' but only " +
                        std::to_string(ranked.size()) + " are available (short by " +
                        std::to_string(k - ranked.size()) + ")");
  }
  const std::size_t stratum =
      hard_stratum_size(ranked.size(), budget.hard_stratum_quantile);
  std::vector<std::string> hard(ranked.begin(), ranked.begin() + stratum);
  std::vector<std::string> easy(ranked.begin() + stratum, ranked.end());

  // Target split between strata, spilling over when one is too small.
  std::size_t want_hard = static_cast<std::size_t>(
      std::llround(budget.hard_fraction * static_cast<double>(k)));
  want_hard = std::min(want_hard, hard.size());
  std::size_t want_easy = k - want_hard;
  if (want_easy > easy.size()) {
    want_hard += want_easy - easy.size();
    want_easy = easy.size();
  }

  SplitMix64 rng(seed);
  auto picked = draw(std::move(hard), want_hard, rng);
  auto picked_easy = draw(std::move(easy), want_easy, rng);
  picked.insert(picked.end(), picked_easy.begin(), picked_easy.end());

  std::vector<TopicContext> out;
  out.reserve(picked.size());
  for (const auto& id : picked) out.push_back(registry.at(id));
  return out;
}

std::vector<PairExample> build_candidate_pairs(
    std::span<const TextSample> texts,
    const std::map<std::string, std::string>& topic_of_text,
    const ContextRegistry& registry, const SimilarityMatrix& matrix,
    const NegativeBudget& budget, std::uint64_t seed) {
  budget.validate();
  std::vector<PairExample> out;
  out.reserve(texts.size() * (1 + budget.negatives_per_text));
  for (const auto& t : texts) {
    auto it = topic_of_text.find(t.id);
    if (it == topic_of_text.end()) {
      throw ConfigError("text '" + t.id + "' is not mapped to a context");
    }
    const TopicContext* own = registry.find(it->second);
    if (own == nullptr) {
      throw ConfigError("text '" + t.id + "' maps to unregistered context '" +
                        it->second + "'");
    }
    auto make = [&](const std::string& context_id) {
      PairExample p;
      p.context_id = context_id;
      p.text_id = t.id;
      p.stage = t.stage;
      p.split = Split::unassigned;
      p.label_source = LabelSource::pending;
      return p;
    };
    out.push_back(make(own->id));
    const auto negatives = sample_negative_contexts(
        *own, registry, matrix, budget, mix_seed(seed, fnv1a64(t.id)));
    for (const auto& n : negatives) out.push_back(make(n.id));
  }
  return out;
}

std::map<std::string, std::string> topics_from_samples(
    std::span<const TextSample> texts) {
  std::map<std::string, std::string> out;
  for (const auto& t : texts) {
    if (t.topic_id) out.emplace(t.id, *t.topic_id);
  }
  return out;
}

}  // namespace relevancy

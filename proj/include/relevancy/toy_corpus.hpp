#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relevancy/corpus.hpp"
#include "relevancy/labeling.hpp"
#include "relevancy/pairgen.hpp"
#include "relevancy/synthgen.hpp"

// A small generated corpus with the same three-register structure as a real
// relevancy dataset: formal titles, informal posts and keyword-free implicit
// posts over twenty topics. Used by the acceptance suite, the benchmarks and
// the CLI demo.
namespace relevancy::toy {

struct ToyCorpusSpec {
  std::size_t formal_per_topic = 15;
  std::size_t informal_topics = 10;
  std::size_t informal_per_topic = 16;
  std::size_t implicit_topics = 10;
  std::size_t implicit_per_topic = 26;
  std::size_t hard_negatives_per_topic = 6;
  std::uint64_t seed = 7;
};

struct ToyCorpus {
  std::vector<std::string> domains;
  std::vector<TopicContext> contexts;
  // Stage 1 and stage 2 texts, deduplicated, each carrying its topic_id.
  std::vector<TextSample> texts;
  std::vector<KeywordBlocklist> blocklists;
  std::map<std::string, MockGenerationProvider::Bank> banks;
  // Topics that receive stage-3 generation.
  std::vector<std::string> implicit_topic_ids;
  ToyCorpusSpec spec;
};

ToyCorpus make_toy_corpus(const ToyCorpusSpec& spec = {});

// Mock labeling oracle: relevant iff the text's topic is the context.
MockLabelProvider::Oracle topic_match_oracle(
    const std::vector<TopicContext>& contexts,
    const std::vector<TextSample>& texts);

struct ToyDataset {
  std::vector<TopicContext> contexts;
  std::vector<TextSample> texts;  // all stages
  std::vector<PairExample> pairs;  // all labeled, split unassigned
};

// Runs the full construction: candidate pairs, mock labeling and stage-3
// generation.
ToyDataset build_toy_dataset(const ToyCorpus& corpus,
                             const NegativeBudget& budget = {},
                             std::uint64_t seed = 7);

}  // namespace relevancy::toy

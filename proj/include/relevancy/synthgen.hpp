#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "relevancy/corpus.hpp"
#include "relevancy/labeling.hpp"

namespace relevancy {

class KeywordBlocklist {
 public:
  KeywordBlocklist() = default;
  // Keywords are normalized and deduplicated; empty ones are rejected.
  KeywordBlocklist(std::string topic_id, std::span<const std::string> keywords);

  const std::string& topic_id() const { return topic_id_; }
  const std::set<std::string>& keywords() const { return keywords_; }
  bool empty() const { return keywords_.empty(); }

 private:
  std::string topic_id_;
  std::set<std::string> keywords_;
};

// Seeds a blocklist from the content words of a context description plus
// manual additions.
KeywordBlocklist blocklist_from_description(
    const TopicContext& context, std::span<const std::string> extra = {});

std::vector<KeywordBlocklist> read_blocklists(const std::filesystem::path& path);
void write_blocklists(const std::filesystem::path& path,
                      std::span<const KeywordBlocklist> blocklists);

// Word tokens of normalized text: maximal runs of letters and digits. ASCII
// punctuation and whitespace separate tokens; non-ASCII code points are kept
// inside tokens.
std::vector<std::string> word_tokens(std::string_view text);

struct LeakPass {};
struct LeakViolation {
  std::vector<std::string> matched;
};
using LeakCheck = std::variant<LeakPass, LeakViolation>;

LeakCheck keyword_leak_check(std::string_view text,
                             const KeywordBlocklist& blocklist);

enum class Polarity { implicit_positive, hard_negative };
enum class Style { personal_experience, complaint, observation };

std::string_view to_string(Style s);
Style parse_style(std::string_view s);

struct GenerationSpec {
  std::string topic_id;
  std::string topic_description;
  std::size_t count = 0;
  Style style = Style::personal_experience;
  Polarity polarity = Polarity::implicit_positive;
};

struct GenerationRequest {
  const GenerationSpec* spec = nullptr;
  std::string prompt;
  // Keywords the candidate must avoid; empty for hard negatives.
  std::vector<std::string> avoid;
  // Running candidate number within the batch, rejections included.
  std::size_t attempt = 0;
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual std::string id() const = 0;
  // Throws ProviderError on failure.
  virtual std::string generate(const GenerationRequest& request) = 0;
};

std::string render_generation_prompt(const GenerationSpec& spec,
                                     const KeywordBlocklist* blocklist);

// Phrase-bank driven deterministic generator. With probability `leak_rate`
// a candidate carries one of the keywords it was asked to avoid.
class MockGenerationProvider : public GenerationProvider {
 public:
  struct Bank {
    std::vector<std::string> implicit_words;
    std::vector<std::string> negative_words;
  };

  MockGenerationProvider(std::map<std::string, Bank> banks, std::uint64_t seed,
                         double leak_rate = 0.0);

  std::string id() const override { return "mock-generator"; }
  std::string generate(const GenerationRequest& request) override;

  std::size_t calls() const;
  std::size_t leaked_candidates() const;

 private:
  std::map<std::string, Bank> banks_;
  std::uint64_t seed_;
  double leak_rate_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
  std::size_t leaked_ = 0;
};

class HttpGenerationProvider : public GenerationProvider {
 public:
  explicit HttpGenerationProvider(HttpProviderConfig config);
  std::string id() const override { return "http:" + config_.model; }
  std::string generate(const GenerationRequest& request) override;

 private:
  HttpProviderConfig config_;
};

struct SyntheticBatch {
  std::vector<TextSample> samples;
  // One labeled pair per sample against the spec topic.
  std::vector<PairExample> pairs;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> leak_counts;
};

// Returns exactly spec.count leak-free samples labeled relevant. Throws
// GenerationError once more than `max_rejections` candidates leaked.
SyntheticBatch generate_implicit(GenerationProvider& provider,
                                 const GenerationSpec& spec,
                                 const KeywordBlocklist& blocklist,
                                 std::size_t max_rejections);

SyntheticBatch generate_hard_negatives(GenerationProvider& provider,
                                       const GenerationSpec& spec);

}  // namespace relevancy

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace relevancy {

enum class Register { formal, informal, implicit_synthetic };
enum class Stage : int { one = 1, two = 2, three = 3 };
enum class Label { not_relevant, relevant };
enum class Split { unassigned, train, validation };
enum class LabelSource { pending, oracle, synthetic_construction, manual };

inline constexpr std::size_t kStageCount = 3;

std::string_view to_string(Register r);
std::string_view to_string(Label l);
std::string_view to_string(Split s);
std::string_view to_string(LabelSource s);
Register parse_register(std::string_view s);
Label parse_label(std::string_view s);
Split parse_split(std::string_view s);
LabelSource parse_label_source(std::string_view s);
Stage stage_from_int(int value);
inline int to_int(Stage s) { return static_cast<int>(s); }

// The register each stage is allowed to carry.
Register register_for(Stage s);

struct TopicContext {
  std::string id;
  std::string description;
  std::string domain;
};

struct TextSample {
  std::string id;
  std::string text;
  Register reg = Register::formal;
  Stage stage = Stage::one;
  std::string source;
  // Optional topic the text was collected for; drives candidate-pair
  // construction and the mock labeling oracle.
  std::optional<std::string> topic_id;
};

struct PairExample {
  std::string context_id;
  std::string text_id;
  std::optional<Label> label;
  Stage stage = Stage::one;
  Split split = Split::unassigned;
  LabelSource label_source = LabelSource::pending;
};

struct StageCounts {
  std::size_t pair_count = 0;
  std::size_t relevant_count = 0;
  std::size_t not_relevant_count = 0;
  std::size_t context_count = 0;

  bool operator==(const StageCounts&) const = default;
};

struct DatasetManifest {
  // Index i holds stage i + 1.
  std::vector<StageCounts> stages = std::vector<StageCounts>(kStageCount);
  // Pair and class counts are column sums; context_count is the number of
  // distinct contexts over all stages.
  StageCounts totals;

  bool operator==(const DatasetManifest&) const = default;
};

// Registry of contexts keyed by id, restricted to a declared domain set.
class ContextRegistry {
 public:
  ContextRegistry() = default;
  ContextRegistry(std::vector<TopicContext> contexts,
                  std::vector<std::string> domains);

  const std::vector<TopicContext>& contexts() const { return contexts_; }
  const std::vector<std::string>& domains() const { return domains_; }
  const TopicContext* find(std::string_view id) const;
  const TopicContext& at(std::string_view id) const;
  std::size_t size() const { return contexts_.size(); }

 private:
  std::vector<TopicContext> contexts_;
  std::vector<std::string> domains_;
};

void validate(const TextSample& sample);

// Lowercases, applies Unicode NFC, collapses inner whitespace runs to a
// single space and strips outer whitespace. Punctuation and diacritics are
// kept.
std::string normalize_text(std::string_view raw);

// Keeps the first sample for each distinct normalized text, in input order.
std::vector<TextSample> dedup_samples(std::span<const TextSample> samples);

DatasetManifest build_manifest(std::span<const PairExample> pairs);

struct SplitResult {
  std::vector<PairExample> train;
  std::vector<PairExample> validation;
};

// Label-stratified split. Each label receives a largest-remainder share of
// round(val_fraction * N) validation slots; members are drawn by a seeded
// shuffle. Both outputs keep input order and carry the assigned split.
SplitResult stratified_split(std::span<const PairExample> pairs,
                             double val_fraction, std::uint64_t seed);

// Per-label validation quotas, indexed by static_cast<int>(Label).
std::pair<std::size_t, std::size_t> apportion_validation(
    std::size_t not_relevant_count, std::size_t relevant_count,
    double val_fraction);

}  // namespace relevancy

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "relevancy/corpus.hpp"

namespace relevancy {

// Stage 2 and 3 prompts must carry this clause.
inline constexpr std::string_view kRegisterNeutralityClause =
    "Informal language, slang, and abbreviations must not affect your "
    "relevancy judgment; judge only whether the text is about the topic.";

inline constexpr std::string_view kVerdictRelevant = "RELEVANT";
inline constexpr std::string_view kVerdictNotRelevant = "NOT_RELEVANT";

struct PromptTemplate {
  std::string id;
  Stage stage = Stage::one;
  // Must contain the {context} and {text} placeholders.
  std::string instruction;
};

struct LabelRequest {
  std::string context_description;
  std::string text;
  Stage stage = Stage::one;
  std::string prompt_template_id;
};

struct LabelResult {
  Label label = Label::not_relevant;
  std::string provider_id;
  bool cached = false;
  std::size_t attempts = 0;
};

// Checks placeholders and, for stages 2 and 3, the neutrality clause.
void validate_template(const PromptTemplate& tmpl);
std::string render_prompt(const PromptTemplate& tmpl,
                          const LabelRequest& request);

// The shipped templates, one per stage.
class TemplateRegistry {
 public:
  TemplateRegistry();
  void add(PromptTemplate tmpl);
  const PromptTemplate& at(const std::string& id) const;
  const PromptTemplate& for_stage(Stage stage) const;

 private:
  std::map<std::string, PromptTemplate> templates_;
  std::map<int, std::string> default_for_stage_;
};

// Strict verdict parsing: surrounding whitespace is ignored, anything other
// than the two verdict tokens is a ProtocolError.
Label parse_verdict(std::string_view response);

struct ProviderCall {
  std::string prompt;
  const LabelRequest* request = nullptr;
};

// A labeling backend. complete() throws ProviderError on transport failure
// and returns the raw response text otherwise. Implementations must be safe
// to call from several threads.
class LabelProvider {
 public:
  virtual ~LabelProvider() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const ProviderCall& call) = 0;
};

// Deterministic provider answering from a hidden ground truth.
class MockLabelProvider : public LabelProvider {
 public:
  using Oracle = std::function<Label(const LabelRequest&)>;

  explicit MockLabelProvider(Oracle oracle, std::string id = "mock");

  std::string id() const override { return id_; }
  std::string complete(const ProviderCall& call) override;

  std::size_t calls() const;
  std::vector<std::string> call_log() const;

 private:
  Oracle oracle_;
  std::string id_;
  mutable std::mutex mu_;
  std::vector<std::string> log_;
};

struct CacheEntry {
  Label label = Label::not_relevant;
  std::string provider_id;
  std::string timestamp;
};

// Thread-safe label cache with an optional append-only JSONL backing file.
class LabelCache {
 public:
  LabelCache() = default;
  // Loads existing records, then appends new ones to the same file.
  explicit LabelCache(std::filesystem::path path);

  static std::string key(const LabelRequest& request);

  std::optional<CacheEntry> get(const std::string& key) const;
  void put(const std::string& key, const CacheEntry& entry);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, CacheEntry> entries_;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
};

struct RetryPolicy {
  std::size_t max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double factor = 2.0;
  double jitter = 0.2;
  std::function<void(std::chrono::milliseconds)> sleep;

  // Delay before retry number `retry` (1-based), jittered deterministically
  // from `salt`.
  std::chrono::milliseconds delay(std::size_t retry, std::uint64_t salt) const;
};

LabelResult label_pair(LabelProvider& provider, const TemplateRegistry& templates,
                       const LabelRequest& request, LabelCache& cache,
                       const RetryPolicy& policy = {});

struct BatchItem {
  std::optional<LabelResult> result;
  std::string error;

  bool ok() const { return result.has_value(); }
};

// At most `parallelism` provider calls in flight; results align with
// `requests`. Failures are reported per item.
std::vector<BatchItem> label_batch(LabelProvider& provider,
                                   const TemplateRegistry& templates,
                                   std::span<const LabelRequest> requests,
                                   LabelCache& cache, std::size_t parallelism,
                                   const RetryPolicy& policy = {});

// HTTP provider: POST {model, prompt} as JSON to `endpoint`. The response is
// either a JSON object with a string field "completion" (or "text"), or the
// verdict as the plain body.
struct HttpProviderConfig {
  std::string endpoint;
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "RELEVANCY_LLM_API_KEY";
  std::chrono::seconds timeout{30};
};

class HttpLabelProvider : public LabelProvider {
 public:
  explicit HttpLabelProvider(HttpProviderConfig config);
  std::string id() const override { return "http:" + config_.model; }
  std::string complete(const ProviderCall& call) override;

  // Shared with the generation provider.
  static std::string post_prompt(const HttpProviderConfig& config,
                                 const std::string& prompt);

 private:
  HttpProviderConfig config_;
};

}  // namespace relevancy

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relevancy/labeling.hpp"
#include "relevancy/pairgen.hpp"
#include "relevancy/trainer.hpp"

namespace relevancy::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

struct Paths {
  std::filesystem::path contexts = "contexts.jsonl";
  std::filesystem::path texts = "texts.jsonl";
  std::filesystem::path candidates = "candidates.jsonl";
  std::filesystem::path pairs = "pairs.jsonl";
  std::filesystem::path splits = "splits.jsonl";
  std::filesystem::path manifest = "manifest.json";
  std::filesystem::path cache = "label_cache.jsonl";
  std::filesystem::path checkpoints = "checkpoints";
  std::filesystem::path training_log = "training_log.jsonl";
  std::filesystem::path blocklists = "blocklists.jsonl";
  std::filesystem::path phrase_bank = "phrase_bank.jsonl";
  std::filesystem::path qualitative = "qualitative_cases.jsonl";
  std::filesystem::path report = "report.json";
};

struct ProviderSettings {
  std::string kind = "mock";  // mock | http
  HttpProviderConfig http;
  std::size_t max_attempts = 3;
  std::size_t parallelism = 4;
};

struct SynthSettings {
  std::string kind = "mock";
  std::size_t implicit_per_topic = 26;
  std::size_t hard_negatives_per_topic = 6;
  std::size_t max_rejections = 300;
  double mock_leak_rate = 0.1;
  std::vector<std::string> topics;  // empty: every blocklist topic
};

struct BackendSettings {
  std::size_t vocab = 8192;
  std::size_t dim = 24;
  std::size_t hidden = 32;
};

// One INI-style file with a section per module; command-line flags override
// file values.
struct PipelineConfig {
  std::filesystem::path workdir = ".";
  Paths paths;
  NegativeBudget budget;
  ProviderSettings labeling;
  SynthSettings synth;
  TrainConfig train;
  BackendSettings backend;
  std::uint64_t seed = 0;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
std::string render_config(const PipelineConfig& config);

// Entry point shared by the executable and the tests.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace relevancy::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relevancy/eval.hpp"
#include "relevancy/trainer.hpp"

namespace relevancy {

// Published stage results, kept for display next to desk-scale numbers.
struct ReferenceRow {
  std::string_view name;
  std::string_view training_data;
  double accuracy, precision, recall, f1;
};
inline constexpr ReferenceRow kPublishedStageResults[] = {
    {"V1", "Formal only (18.8K)", 0.933, 0.878, 0.845, 0.860},
    {"V2", "+ Informal (26.7K)", 0.956, 0.930, 0.914, 0.922},
    {"V3", "+ Implicit (31.4K)", 0.965, 0.948, 0.948, 0.948},
};

struct StageSubset {
  std::string name;
  // Cumulative: each subset contains every pair of the previous one.
  std::vector<TrainingExample> train;
};

struct StageEntry {
  std::string name;
  MetricsReport metrics;
  DatasetManifest manifest;
  std::size_t best_epoch = 0;
  std::uint64_t validation_fingerprint = 0;
};

struct StageReport {
  std::vector<StageEntry> stages;
  std::string config_fingerprint;
};

using BackendFactory = std::function<std::unique_ptr<EncoderBackend>()>;

// Order-sensitive hash of (context, text, label) triples.
std::uint64_t fingerprint(std::span<const TrainingExample> examples);

// Trains one model per cumulative subset with the same config and scores all
// of them on `validation`.
StageReport staged_evaluation(std::span<const StageSubset> stages,
                              std::span<const TrainingExample> validation,
                              const TrainConfig& config,
                              const BackendFactory& factory);

Json to_json(const StageReport& report);
// Plain-text table: Training Data, Accuracy, Precision, Recall, F1.
std::string render_table(const StageReport& report);

enum class CaseGroup { explicit_formal, explicit_informal, implicit, rejected };
std::string_view to_string(CaseGroup g);
CaseGroup parse_case_group(std::string_view s);

struct QualitativeCase {
  CaseGroup group = CaseGroup::explicit_formal;
  std::string context;
  std::string text;
  Label expected = Label::relevant;
  double reference_score = 0;
};

struct QualitativeResult {
  QualitativeCase input;
  Prediction prediction;
  bool correct() const { return prediction.label == input.expected; }
};

// The ten fixed register cases.
std::vector<QualitativeCase> default_qualitative_cases();
std::vector<QualitativeCase> read_qualitative_cases(
    const std::filesystem::path& path);
void write_qualitative_cases(const std::filesystem::path& path,
                             std::span<const QualitativeCase> cases);

std::vector<QualitativeResult> qualitative_suite(
    const EncoderBackend& backend, std::span<const QualitativeCase> cases,
    double threshold = 0.5, std::size_t max_sequence_length = 256);

Json to_json(std::span<const QualitativeResult> results);
std::string render_table(std::span<const QualitativeResult> results);

}  // namespace relevancy

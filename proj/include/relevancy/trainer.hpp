#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relevancy/corpus.hpp"
#include "relevancy/eval.hpp"

namespace relevancy {

enum class ClassWeighting { inverse_frequency, none };

struct TrainConfig {
  std::size_t epochs = 5;
  double learning_rate = 2e-5;
  std::size_t batch_size = 16;
  std::size_t max_sequence_length = 256;
  std::size_t patience = 2;
  double val_fraction = 0.15;
  ClassWeighting class_weighting = ClassWeighting::inverse_frequency;
  std::uint64_t seed = 0;
  double threshold = 0.5;

  void validate() const;
  std::string fingerprint() const;
};

struct ClassWeights {
  double weight_relevant = 1.0;
  double weight_not_relevant = 1.0;

  double for_label(Label l) const {
    return l == Label::relevant ? weight_relevant : weight_not_relevant;
  }
};

// w_c = N / (K * N_c) with K = 2 classes.
ClassWeights compute_class_weights(std::size_t relevant_count,
                                   std::size_t not_relevant_count);

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::int32_t> tokenize(std::string_view text) const = 0;
  virtual std::int32_t start_id() const = 0;
  virtual std::int32_t separator_id() const = 0;
  virtual std::size_t vocab_size() const = 0;
};

// Normalized word tokens hashed into a fixed number of buckets. Ids 0..3 are
// reserved for padding, start, separator and unknown.
class HashingTokenizer : public Tokenizer {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kStart = 1;
  static constexpr std::int32_t kSeparator = 2;
  static constexpr std::int32_t kReserved = 4;

  explicit HashingTokenizer(std::size_t buckets = 8192);
  std::vector<std::int32_t> tokenize(std::string_view text) const override;
  std::int32_t start_id() const override { return kStart; }
  std::int32_t separator_id() const override { return kSeparator; }
  std::size_t vocab_size() const override { return buckets_; }

 private:
  std::size_t buckets_;
};

struct EncodedPair {
  std::vector<std::int32_t> token_ids;
  // 0 for the start marker, context and first separator; 1 afterwards.
  std::vector<std::uint8_t> segments;
  std::vector<std::uint8_t> attention_mask;

  std::size_t size() const { return token_ids.size(); }
};

// <start> context <sep> text <sep>. Over-long inputs lose text tokens from
// the right first, then context tokens.
EncodedPair encode_pair(std::string_view context, std::string_view text,
                        const Tokenizer& tokenizer,
                        std::size_t max_sequence_length);

// Checks the structural invariants; throws InputError on violation.
void validate_encoding(const EncodedPair& pair, const Tokenizer& tokenizer,
                       std::size_t max_sequence_length);

// Pluggable trainable scorer. Implementations must be deterministic given the
// seed passed to reset() and the sequence of train_step() calls.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual std::string kind() const = 0;
  virtual const Tokenizer& tokenizer() const = 0;

  virtual void reset(std::uint64_t seed) = 0;
  // Probability of relevance in [0, 1].
  virtual double score(const EncodedPair& pair) const = 0;
  // One optimizer step on the weighted binary cross-entropy of the batch.
  // Returns the mean weighted loss before the update.
  virtual double train_step(std::span<const EncodedPair* const> batch,
                            std::span<const double> targets,
                            std::span<const double> weights,
                            double learning_rate) = 0;

  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> params) = 0;

  virtual void save(const std::filesystem::path& path) const = 0;
  virtual void load(const std::filesystem::path& path) = 0;

  bool trained() const { return trained_; }
  void mark_trained(bool value = true) { trained_ = value; }

  // Parallel batch scoring; identical to scoring one by one.
  std::vector<double> score_batch(std::span<const EncodedPair> pairs) const;
  std::vector<double> score_batch_serial(std::span<const EncodedPair> pairs) const;

 private:
  bool trained_ = false;
};

// Desk-scale cross-encoder: mean-pooled token embeddings per segment,
// features [c, t, c*t, |c-t|] into a one-hidden-layer ReLU head with a
// sigmoid output, trained with Adam.
class BagOfEmbeddingsBackend : public EncoderBackend {
 public:
  struct Shape {
    std::size_t vocab = 8192;
    std::size_t dim = 24;
    std::size_t hidden = 32;
  };

  BagOfEmbeddingsBackend();
  explicit BagOfEmbeddingsBackend(Shape shape);

  std::string kind() const override { return "bag-of-embeddings"; }
  const Tokenizer& tokenizer() const override { return tokenizer_; }
  void reset(std::uint64_t seed) override;
  double score(const EncodedPair& pair) const override;
  double train_step(std::span<const EncodedPair* const> batch,
                    std::span<const double> targets,
                    std::span<const double> weights,
                    double learning_rate) override;
  std::vector<double> parameters() const override { return params_; }
  void set_parameters(std::span<const double> params) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

  const Shape& shape() const { return shape_; }

 private:
  struct Forward;
  void forward(const EncodedPair& pair, Forward& f) const;

  std::size_t embed_offset() const { return 0; }
  std::size_t w1_offset() const { return shape_.vocab * shape_.dim; }
  std::size_t b1_offset() const { return w1_offset() + shape_.hidden * 4 * shape_.dim; }
  std::size_t w2_offset() const { return b1_offset() + shape_.hidden; }
  std::size_t b2_offset() const { return w2_offset() + shape_.hidden; }
  std::size_t param_count() const { return b2_offset() + 1; }

  Shape shape_;
  HashingTokenizer tokenizer_;
  std::vector<double> params_;
  std::vector<double> adam_m_;
  std::vector<double> adam_v_;
  std::size_t step_ = 0;
};

// A pair resolved to its strings, ready for the trainer.
struct TrainingExample {
  PairExample pair;
  std::string context;
  std::string text;

  Label label() const { return *pair.label; }
};

std::vector<TrainingExample> materialize(std::span<const PairExample> pairs,
                                         const ContextRegistry& contexts,
                                         std::span<const TextSample> texts);

struct StopDecision {
  std::size_t stop_epoch = 0;  // last epoch that ran, 1-based
  std::size_t best_epoch = 0;  // 1-based
  bool early_stopped = false;

  bool operator==(const StopDecision&) const = default;
};

// Tracks validation F1 across epochs. An epoch improves iff its F1 is
// strictly greater than every earlier F1; training halts once `patience`
// consecutive epochs (at least one) have not improved.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when training should stop after this epoch.
  bool observe(double f1);
  bool improved_last() const { return improved_last_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_f1() const { return best_f1_; }
  std::size_t epochs_seen() const { return epoch_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  double best_f1_ = 0;
  std::size_t stale_ = 0;
  bool improved_last_ = false;
};

// Replays a full F1 trace through EarlyStopping.
StopDecision decide_early_stop(std::span<const double> f1_trace,
                               std::size_t patience);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0;
  MetricsReport validation;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
  ClassWeights weights;
};

struct TrainOutputs {
  // When set, writes checkpoints/epoch-<n>/model.bin and a `best` marker.
  std::optional<std::filesystem::path> checkpoint_dir;
  // When set, writes one JSONL record per epoch.
  std::optional<std::filesystem::path> log_path;
};

// Leaves `backend` holding the best-F1 epoch's parameters.
TrainResult train(const TrainConfig& config,
                  std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> validation_set,
                  EncoderBackend& backend, const TrainOutputs& outputs = {});

// Scores and thresholds a validation set with a fixed backend.
MetricsReport evaluate(const EncoderBackend& backend,
                       std::span<const TrainingExample> examples,
                       std::size_t max_sequence_length, double threshold = 0.5);

struct Prediction {
  Label label = Label::not_relevant;
  double score = 0;
};

Prediction predict(const EncoderBackend& backend, std::string_view context,
                   std::string_view text, double threshold = 0.5,
                   std::size_t max_sequence_length = 256);

// Reads the `best` marker and loads that epoch's parameters.
void load_best_checkpoint(EncoderBackend& backend,
                          const std::filesystem::path& checkpoint_dir);

Json to_json(const EpochRecord& record);

}  // namespace relevancy

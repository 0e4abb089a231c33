#include "relevancy/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "relevancy/errors.hpp"
#include "relevancy/random.hpp"

namespace relevancy {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_sequence_length < 4) {
    throw ConfigError("max_sequence_length must be at least 4");
  }
  if (!(val_fraction >= 0 && val_fraction < 1)) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }
  if (!(threshold >= 0 && threshold <= 1)) {
    throw ConfigError("threshold must lie in [0, 1]");
  }
}

std::string TrainConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "epochs=" << epochs << ";lr=" << learning_rate
     << ";batch=" << batch_size << ";maxlen=" << max_sequence_length
     << ";patience=" << patience << ";val=" << val_fraction << ";weighting="
     << (class_weighting == ClassWeighting::inverse_frequency ? "inverse_frequency"
                                                              : "none")
     << ";seed=" << seed << ";threshold=" << threshold;
  return os.str();
}

ClassWeights compute_class_weights(std::size_t relevant_count,
                                   std::size_t not_relevant_count) {
  if (relevant_count == 0 || not_relevant_count == 0) {
    throw ConfigError("class weighting needs both classes present (relevant=" +
                      std::to_string(relevant_count) + ", not_relevant=" +
                      std::to_string(not_relevant_count) + ")");
  }
  const double n = static_cast<double>(relevant_count + not_relevant_count);
  return ClassWeights{n / (2.0 * static_cast<double>(relevant_count)),
                      n / (2.0 * static_cast<double>(not_relevant_count))};
}

EncodedPair encode_pair(std::string_view context, std::string_view text,
                        const Tokenizer& tokenizer,
                        std::size_t max_sequence_length) {
  if (max_sequence_length < 4) {
    throw ConfigError("max_sequence_length must be at least 4");
  }
  auto ctx = tokenizer.tokenize(context);
  auto txt = tokenizer.tokenize(text);
  const std::size_t budget = max_sequence_length - 3;
  if (ctx.size() + txt.size() > budget) {
    const std::size_t keep_text = budget > ctx.size() ? budget - ctx.size() : 0;
    txt.resize(std::min(txt.size(), keep_text));
    if (ctx.size() > budget) ctx.resize(budget);
  }
  EncodedPair out;
  out.token_ids.reserve(ctx.size() + txt.size() + 3);
  out.token_ids.push_back(tokenizer.start_id());
  out.token_ids.insert(out.token_ids.end(), ctx.begin(), ctx.end());
  out.token_ids.push_back(tokenizer.separator_id());
  const std::size_t first_segment = out.token_ids.size();
  out.token_ids.insert(out.token_ids.end(), txt.begin(), txt.end());
  out.token_ids.push_back(tokenizer.separator_id());
  out.segments.assign(out.token_ids.size(), 1);
  std::fill(out.segments.begin(),
            out.segments.begin() + static_cast<long>(first_segment), 0);
  out.attention_mask.assign(out.token_ids.size(), 1);
  return out;
}

void validate_encoding(const EncodedPair& pair, const Tokenizer& tokenizer,
                       std::size_t max_sequence_length) {
  const auto& ids = pair.token_ids;
  if (ids.size() > max_sequence_length) {
    throw InputError("encoding exceeds max_sequence_length");
  }
  if (pair.segments.size() != ids.size() ||
      pair.attention_mask.size() != ids.size()) {
    throw InputError("encoding arrays differ in length");
  }
  std::size_t starts = 0;
  std::vector<std::size_t> seps;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == tokenizer.start_id()) ++starts;
    if (ids[i] == tokenizer.separator_id()) seps.push_back(i);
  }
  if (starts != 1 || ids.empty() || ids.front() != tokenizer.start_id()) {
    throw InputError("encoding needs exactly one leading start marker");
  }
  if (seps.size() != 2 || seps.back() != ids.size() - 1) {
    throw InputError("encoding needs two separators, the last one final");
  }
}

std::vector<TrainingExample> materialize(std::span<const PairExample> pairs,
                                         const ContextRegistry& contexts,
                                         std::span<const TextSample> texts) {
  std::unordered_map<std::string_view, const TextSample*> by_id;
  for (const auto& t : texts) by_id.emplace(t.id, &t);
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.label) {
      throw InputError("pair (" + p.context_id + ", " + p.text_id +
                       ") has no label");
    }
    auto it = by_id.find(p.text_id);
    if (it == by_id.end()) {
      throw InputError("pair references unknown text '" + p.text_id + "'");
    }
    out.push_back(TrainingExample{p, contexts.at(p.context_id).description,
                                  it->second->text});
  }
  return out;
}

bool EarlyStopping::observe(double f1) {
  ++epoch_;
  improved_last_ = epoch_ == 1 || f1 > best_f1_;
  if (improved_last_) {
    best_f1_ = f1;
    best_epoch_ = epoch_;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= std::max<std::size_t>(patience_, 1);
}

StopDecision decide_early_stop(std::span<const double> f1_trace,
                               std::size_t patience) {
  EarlyStopping stopper(patience);
  StopDecision d;
  for (double f1 : f1_trace) {
    if (stopper.observe(f1)) {
      d.early_stopped = true;
      break;
    }
  }
  d.stop_epoch = stopper.epochs_seen();
  d.best_epoch = stopper.best_epoch();
  return d;
}

namespace {

std::vector<EncodedPair> encode_all(std::span<const TrainingExample> examples,
                                    const Tokenizer& tokenizer,
                                    std::size_t max_len) {
  std::vector<EncodedPair> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    out.push_back(encode_pair(e.context, e.text, tokenizer, max_len));
  }
  return out;
}

MetricsReport score_encoded(const EncoderBackend& backend,
                            std::span<const EncodedPair> encoded,
                            std::span<const TrainingExample> examples,
                            double threshold) {
  const auto scores = backend.score_batch(encoded);
  std::vector<Label> preds(scores.size()), truths(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    preds[i] = scores[i] >= threshold ? Label::relevant : Label::not_relevant;
    truths[i] = examples[i].label();
  }
  return metrics(confusion(preds, truths));
}

std::filesystem::path epoch_dir(const std::filesystem::path& root,
                                std::size_t epoch) {
  return root / ("epoch-" + std::to_string(epoch));
}

}  // namespace

Json to_json(const EpochRecord& r) {
  return Json{{"epoch", r.epoch},
              {"accuracy", r.validation.accuracy},
              {"precision", r.validation.precision},
              {"recall", r.validation.recall},
              {"f1", r.validation.f1}};
}

TrainResult train(const TrainConfig& config,
                  std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> validation_set,
                  EncoderBackend& backend, const TrainOutputs& outputs) {
  config.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (validation_set.empty()) throw ConfigError("validation set is empty");
  std::size_t relevant = 0;
  for (const auto& e : train_set) relevant += e.label() == Label::relevant;
  const std::size_t not_relevant = train_set.size() - relevant;
  if (relevant == 0 || not_relevant == 0) {
    throw ConfigError("training set contains a single class");
  }

  TrainResult result;
  result.weights = config.class_weighting == ClassWeighting::inverse_frequency
                       ? compute_class_weights(relevant, not_relevant)
                       : ClassWeights{};

  std::ofstream log;
  if (outputs.log_path) {
    if (outputs.log_path->has_parent_path()) {
      std::filesystem::create_directories(outputs.log_path->parent_path());
    }
    log.open(*outputs.log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw InputError("cannot write " + outputs.log_path->string());
  }
  if (outputs.checkpoint_dir) {
    std::filesystem::create_directories(*outputs.checkpoint_dir);
  }

  try {
    backend.reset(config.seed);
    const auto& tok = backend.tokenizer();
    const auto train_enc = encode_all(train_set, tok, config.max_sequence_length);
    const auto val_enc =
        encode_all(validation_set, tok, config.max_sequence_length);

    std::vector<double> targets(train_set.size()), weights(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      const Label l = train_set[i].label();
      targets[i] = l == Label::relevant ? 1.0 : 0.0;
      weights[i] = result.weights.for_label(l);
    }

    EarlyStopping stopper(config.patience);
    std::vector<double> best_params;
    std::vector<std::size_t> order(train_set.size());
    std::vector<const EncodedPair*> batch;
    std::vector<double> batch_targets, batch_weights;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      SplitMix64 rng(mix_seed(config.seed, epoch));
      seeded_shuffle(std::span<std::size_t>(order), rng);

      double loss_sum = 0;
      std::size_t steps = 0;
      for (std::size_t start = 0; start < order.size();
           start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        batch.clear();
        batch_targets.clear();
        batch_weights.clear();
        for (std::size_t k = start; k < end; ++k) {
          batch.push_back(&train_enc[order[k]]);
          batch_targets.push_back(targets[order[k]]);
          batch_weights.push_back(weights[order[k]]);
        }
        const double loss = backend.train_step(batch, batch_targets,
                                               batch_weights, config.learning_rate);
        if (!std::isfinite(loss)) {
          throw TrainingError("non-finite loss in epoch " + std::to_string(epoch));
        }
        loss_sum += loss;
        ++steps;
      }

      EpochRecord rec;
      rec.epoch = epoch;
      rec.mean_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
      rec.validation =
          score_encoded(backend, val_enc, validation_set, config.threshold);
      result.epochs.push_back(rec);
      if (log.is_open()) log << to_json(rec).dump() << '\n';
      if (outputs.checkpoint_dir) {
        backend.save(epoch_dir(*outputs.checkpoint_dir, epoch) / "model.bin");
      }

      const bool stop = stopper.observe(rec.validation.f1);
      if (stopper.improved_last()) best_params = backend.parameters();
      if (stop) {
        result.early_stopped = true;
        break;
      }
    }
    result.best_epoch = stopper.best_epoch();
    backend.set_parameters(best_params);
    backend.mark_trained(true);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw TrainingError(std::string("backend failure: ") + e.what());
  }

  if (outputs.checkpoint_dir) {
    std::ofstream best(*outputs.checkpoint_dir / "best",
                       std::ios::binary | std::ios::trunc);
    best << "epoch-" << result.best_epoch << '\n';
  }
  return result;
}

MetricsReport evaluate(const EncoderBackend& backend,
                       std::span<const TrainingExample> examples,
                       std::size_t max_sequence_length, double threshold) {
  if (!backend.trained()) throw StateError("backend has not been trained");
  const auto enc = encode_all(examples, backend.tokenizer(), max_sequence_length);
  return score_encoded(backend, enc, examples, threshold);
}

Prediction predict(const EncoderBackend& backend, std::string_view context,
                   std::string_view text, double threshold,
                   std::size_t max_sequence_length) {
  if (!backend.trained()) throw StateError("backend has not been trained");
  const auto enc =
      encode_pair(context, text, backend.tokenizer(), max_sequence_length);
  const double s = backend.score(enc);
  return Prediction{s >= threshold ? Label::relevant : Label::not_relevant, s};
}

void load_best_checkpoint(EncoderBackend& backend,
                          const std::filesystem::path& checkpoint_dir) {
  std::ifstream in(checkpoint_dir / "best");
  std::string name;
  if (!in || !(in >> name)) {
    throw StateError("no best marker in " + checkpoint_dir.string());
  }
  backend.load(checkpoint_dir / name / "model.bin");
}

}  // namespace relevancy

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "relevancy/errors.hpp"
#include "relevancy/random.hpp"
#include "relevancy/report.hpp"

namespace relevancy {

ConfusionMatrix confusion(std::span<const Label> predictions,
                          std::span<const Label> truths) {
  if (predictions.size() != truths.size()) {
    throw InputError("confusion: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(truths.size()) +
                     " truths");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred = predictions[i] == Label::relevant;
    const bool truth = truths[i] == Label::relevant;
    if (pred && truth) {
      ++m.true_positive;
    } else if (pred) {
      ++m.false_positive;
    } else if (truth) {
      ++m.false_negative;
    } else {
      ++m.true_negative;
    }
  }
  return m;
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

MetricsReport metrics(const ConfusionMatrix& m) {
  if (m.total() == 0) throw InputError("metrics of an empty confusion matrix");
  MetricsReport r;
  r.matrix = m;
  r.accuracy = ratio(m.true_positive + m.true_negative, m.total());
  r.precision = ratio(m.true_positive, m.true_positive + m.false_positive);
  r.recall = ratio(m.true_positive, m.true_positive + m.false_negative);
  const double pr = r.precision + r.recall;
  r.f1 = pr > 0 ? 2 * r.precision * r.recall / pr : 0.0;
  return r;
}

Json to_json(const ConfusionMatrix& m) {
  return Json{{"true_negative", m.true_negative},
              {"false_positive", m.false_positive},
              {"false_negative", m.false_negative},
              {"true_positive", m.true_positive}};
}

Json to_json(const MetricsReport& r) {
  return Json{{"accuracy", r.accuracy},
              {"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1},
              {"confusion", to_json(r.matrix)}};
}

std::string format_percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", ratio * 100.0);
  return buf;
}

std::string format_f1(double f1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", f1);
  return buf;
}

std::uint64_t fingerprint(std::span<const TrainingExample> examples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : examples) {
    h = fnv1a64(e.context, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(e.text, h);
    h = fnv1a64(to_string(e.label()), h);
    h = fnv1a64("\x1e", h);
  }
  return h;
}

namespace {

std::multiset<std::string> pair_keys(std::span<const TrainingExample> xs) {
  std::multiset<std::string> keys;
  for (const auto& e : xs) keys.insert(e.pair.context_id + '\t' + e.pair.text_id);
  return keys;
}

}  // namespace

StageReport staged_evaluation(std::span<const StageSubset> stages,
                              std::span<const TrainingExample> validation,
                              const TrainConfig& config,
                              const BackendFactory& factory) {
  StageReport report;
  report.config_fingerprint = config.fingerprint();
  std::multiset<std::string> previous;
  for (const auto& stage : stages) {
    auto keys = pair_keys(stage.train);
    if (!std::includes(keys.begin(), keys.end(), previous.begin(),
                       previous.end())) {
      throw InputError("stage '" + stage.name +
                       "' does not contain the previous stage's pairs");
    }
    previous = std::move(keys);

    auto backend = factory();
    const auto result = train(config, stage.train, validation, *backend);
    StageEntry entry;
    entry.name = stage.name;
    entry.metrics = evaluate(*backend, validation, config.max_sequence_length,
                             config.threshold);
    std::vector<PairExample> pairs;
    pairs.reserve(stage.train.size());
    for (const auto& e : stage.train) pairs.push_back(e.pair);
    entry.manifest = build_manifest(pairs);
    entry.best_epoch = result.best_epoch;
    entry.validation_fingerprint = fingerprint(validation);
    report.stages.push_back(std::move(entry));
  }
  return report;
}

Json to_json(const StageReport& report) {
  Json stages = Json::array();
  for (const auto& s : report.stages) {
    stages.push_back(Json{{"name", s.name},
                          {"metrics", to_json(s.metrics)},
                          {"manifest", to_json(s.manifest)},
                          {"best_epoch", s.best_epoch},
                          {"validation_fingerprint", s.validation_fingerprint}});
  }
  return Json{{"config", report.config_fingerprint},
              {"stages", std::move(stages)}};
}

namespace {

std::string row(const std::string& name, const std::string& data,
                const std::string& acc, const std::string& prec,
                const std::string& rec, const std::string& f1) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s %-24s %9s %10s %8s %7s\n", name.c_str(),
                data.c_str(), acc.c_str(), prec.c_str(), rec.c_str(),
                f1.c_str());
  return buf;
}

}  // namespace

std::string render_table(const StageReport& report) {
  std::string out = row("", "Training Data", "Accuracy", "Precision", "Recall", "F1");
  for (std::size_t i = 0; i < report.stages.size(); ++i) {
    const auto& s = report.stages[i];
    const std::string data =
        s.name + " (" + std::to_string(s.manifest.totals.pair_count) + ")";
    out += row("V" + std::to_string(i + 1), data,
               format_percent(s.metrics.accuracy),
               format_percent(s.metrics.precision),
               format_percent(s.metrics.recall), format_f1(s.metrics.f1));
  }
  return out;
}

std::string_view to_string(CaseGroup g) {
  switch (g) {
    case CaseGroup::explicit_formal: return "explicit-formal";
    case CaseGroup::explicit_informal: return "explicit-informal";
    case CaseGroup::implicit: return "implicit";
    case CaseGroup::rejected: return "correctly-rejected";
  }
  return "explicit-formal";
}

CaseGroup parse_case_group(std::string_view s) {
  if (s == "explicit-formal") return CaseGroup::explicit_formal;
  if (s == "explicit-informal") return CaseGroup::explicit_informal;
  if (s == "implicit") return CaseGroup::implicit;
  if (s == "correctly-rejected") return CaseGroup::rejected;
  throw InputError("unknown case group '" + std::string(s) + "'");
}

std::vector<QualitativeCase> default_qualitative_cases() {
  using G = CaseGroup;
  const auto R = Label::relevant;
  const auto N = Label::not_relevant;
  return {
      {G::explicit_formal, "Monetary policy", "BI tahan suku bunga acuan 6%", R, 1.000},
      {G::explicit_formal, "Oil prices", "OPEC pangkas produksi, minyak melonjak", R, 1.000},
      {G::explicit_informal, "Fuel prices", "gila bensin naik lagi, dompet makin tipis", R, 1.000},
      {G::explicit_informal, "Tech layoffs", "temen gw di tokped kena layoff semua divisi", R, 0.997},
      {G::implicit, "Food prices", "harga cabai gila-gilaan, 100rb sekilo", R, 0.988},
      {G::implicit, "Corruption", "duit rakyat dimakan koruptor terus", R, 1.000},
      {G::implicit, "Crypto", "baru aja kena rug pull rugi 50jt", R, 0.628},
      {G::rejected, "Fuel prices", "makan siang apa ya hari ini", N, 0.000},
      {G::rejected, "Elections", "eh ada promo shopee 3.3 nih", N, 0.000},
      {G::rejected, "Gambling", "lagi main mobile legends rank mythic", N, 0.000},
  };
}

std::vector<QualitativeCase> read_qualitative_cases(
    const std::filesystem::path& path) {
  std::vector<QualitativeCase> out;
  for_each_jsonl(path, [&](const Json& j) {
    out.push_back(QualitativeCase{
        parse_case_group(j.at("group").get<std::string>()),
        j.at("context").get<std::string>(), j.at("text").get<std::string>(),
        parse_label(j.at("expected").get<std::string>()),
        j.value("reference_score", 0.0)});
  });
  return out;
}

void write_qualitative_cases(const std::filesystem::path& path,
                             std::span<const QualitativeCase> cases) {
  std::vector<Json> records;
  for (const auto& c : cases) {
    records.push_back(Json{{"group", to_string(c.group)},
                           {"context", c.context},
                           {"text", c.text},
                           {"expected", to_string(c.expected)},
                           {"reference_score", c.reference_score}});
  }
  write_jsonl(path, records);
}

std::vector<QualitativeResult> qualitative_suite(
    const EncoderBackend& backend, std::span<const QualitativeCase> cases,
    double threshold, std::size_t max_sequence_length) {
  if (!backend.trained()) throw StateError("backend has not been trained");
  std::vector<QualitativeResult> out;
  out.reserve(cases.size());
  for (const auto& c : cases) {
    out.push_back(QualitativeResult{
        c, predict(backend, c.context, c.text, threshold, max_sequence_length)});
  }
  return out;
}

Json to_json(std::span<const QualitativeResult> results) {
  Json arr = Json::array();
  for (const auto& r : results) {
    arr.push_back(Json{{"group", to_string(r.input.group)},
                       {"context", r.input.context},
                       {"text", r.input.text},
                       {"expected", to_string(r.input.expected)},
                       {"predicted", to_string(r.prediction.label)},
                       {"score", r.prediction.score},
                       {"reference_score", r.input.reference_score}});
  }
  return arr;
}

std::string render_table(std::span<const QualitativeResult> results) {
  std::ostringstream os;
  std::string_view group;
  for (const auto& r : results) {
    if (to_string(r.input.group) != group) {
      group = to_string(r.input.group);
      os << group << ":\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", r.prediction.score);
    os << "  " << r.input.context << " | " << r.input.text << " | "
       << (r.prediction.label == Label::relevant ? "Rel." : "Not rel.") << " | "
       << buf << (r.correct() ? "" : "  (expected " +
                                          std::string(to_string(r.input.expected)) +
                                          ")")
       << '\n';
  }
  return os.str();
}

}  // namespace relevancy

#include "relevancy/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "CLI11.hpp"
#include "relevancy/errors.hpp"
#include "relevancy/jsonl.hpp"
#include "relevancy/report.hpp"
#include "relevancy/synthgen.hpp"
#include "relevancy/toy_corpus.hpp"

namespace relevancy::cli {

namespace fs = std::filesystem;

fs::path PipelineConfig::resolve(const fs::path& p) const {
  return p.is_absolute() ? p : workdir / p;
}

void PipelineConfig::validate() const {
  budget.validate();
  train.validate();
  if (labeling.kind != "mock" && labeling.kind != "http") {
    throw ConfigError("labeling.provider must be 'mock' or 'http'");
  }
  if (labeling.kind == "http" && labeling.http.endpoint.empty()) {
    throw ConfigError("labeling.endpoint is required for the http provider");
  }
  if (synth.kind != "mock" && synth.kind != "http") {
    throw ConfigError("synthgen.provider must be 'mock' or 'http'");
  }
  if (labeling.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (labeling.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (!(synth.mock_leak_rate >= 0 && synth.mock_leak_rate <= 1)) {
    throw ConfigError("synthgen.leak_rate must lie in [0, 1]");
  }
  if (backend.dim == 0 || backend.hidden == 0 || backend.vocab <= 4) {
    throw ConfigError("backend dimensions are invalid");
  }
}

namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(' ');
    const auto b = item.find_last_not_of(' ');
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

void apply(PipelineConfig& c, const std::string& key, const std::string& v) {
  auto& p = c.paths;
  static const std::unordered_map<std::string, fs::path Paths::*> path_keys = {
      {"paths.contexts", &Paths::contexts},
      {"paths.texts", &Paths::texts},
      {"paths.candidates", &Paths::candidates},
      {"paths.pairs", &Paths::pairs},
      {"paths.splits", &Paths::splits},
      {"paths.manifest", &Paths::manifest},
      {"paths.cache", &Paths::cache},
      {"paths.checkpoints", &Paths::checkpoints},
      {"paths.training_log", &Paths::training_log},
      {"paths.blocklists", &Paths::blocklists},
      {"paths.phrase_bank", &Paths::phrase_bank},
      {"paths.qualitative", &Paths::qualitative},
      {"paths.report", &Paths::report},
  };
  if (auto it = path_keys.find(key); it != path_keys.end()) {
    p.*(it->second) = v;
  } else if (key == "run.seed") {
    c.seed = to_size(key, v);
  } else if (key == "pairgen.negatives_per_text") {
    c.budget.negatives_per_text = to_size(key, v);
  } else if (key == "pairgen.hard_fraction") {
    c.budget.hard_fraction = to_double(key, v);
  } else if (key == "pairgen.hard_stratum_quantile") {
    c.budget.hard_stratum_quantile = to_double(key, v);
  } else if (key == "labeling.provider") {
    c.labeling.kind = v;
  } else if (key == "labeling.endpoint") {
    c.labeling.http.endpoint = v;
  } else if (key == "labeling.model") {
    c.labeling.http.model = v;
  } else if (key == "labeling.max_attempts") {
    c.labeling.max_attempts = to_size(key, v);
  } else if (key == "labeling.parallelism") {
    c.labeling.parallelism = to_size(key, v);
  } else if (key == "synthgen.provider") {
    c.synth.kind = v;
  } else if (key == "synthgen.implicit_per_topic") {
    c.synth.implicit_per_topic = to_size(key, v);
  } else if (key == "synthgen.hard_negatives_per_topic") {
    c.synth.hard_negatives_per_topic = to_size(key, v);
  } else if (key == "synthgen.max_rejections") {
    c.synth.max_rejections = to_size(key, v);
  } else if (key == "synthgen.leak_rate") {
    c.synth.mock_leak_rate = to_double(key, v);
  } else if (key == "synthgen.topics") {
    c.synth.topics = split_list(v);
  } else if (key == "trainer.epochs") {
    c.train.epochs = to_size(key, v);
  } else if (key == "trainer.learning_rate") {
    c.train.learning_rate = to_double(key, v);
  } else if (key == "trainer.batch_size") {
    c.train.batch_size = to_size(key, v);
  } else if (key == "trainer.max_sequence_length") {
    c.train.max_sequence_length = to_size(key, v);
  } else if (key == "trainer.patience") {
    c.train.patience = to_size(key, v);
  } else if (key == "trainer.val_fraction") {
    c.train.val_fraction = to_double(key, v);
  } else if (key == "trainer.threshold") {
    c.train.threshold = to_double(key, v);
  } else if (key == "trainer.class_weighting") {
    if (v == "inverse_frequency") {
      c.train.class_weighting = ClassWeighting::inverse_frequency;
    } else if (v == "none") {
      c.train.class_weighting = ClassWeighting::none;
    } else {
      throw ConfigError(key + ": expected inverse_frequency or none");
    }
  } else if (key == "backend.vocab") {
    c.backend.vocab = to_size(key, v);
  } else if (key == "backend.dim") {
    c.backend.dim = to_size(key, v);
  } else if (key == "backend.hidden") {
    c.backend.hidden = to_size(key, v);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

}  // namespace

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  PipelineConfig c;
  c.workdir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path.string());
  } catch (const CLI::Error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string key;
    for (const auto& parent : item.parents) key += parent + ".";
    key += item.name;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) {
      if (i) value += ",";
      value += item.inputs[i];
    }
    apply(c, key, value);
  }
  return c;
}

std::string render_config(const PipelineConfig& c) {
  std::ostringstream os;
  os.precision(10);
  const auto& p = c.paths;
  os << "[run]\nseed = " << c.seed << "\n\n"
     << "[paths]\n"
     << "contexts = " << p.contexts.string() << "\n"
     << "texts = " << p.texts.string() << "\n"
     << "candidates = " << p.candidates.string() << "\n"
     << "pairs = " << p.pairs.string() << "\n"
     << "splits = " << p.splits.string() << "\n"
     << "manifest = " << p.manifest.string() << "\n"
     << "cache = " << p.cache.string() << "\n"
     << "checkpoints = " << p.checkpoints.string() << "\n"
     << "training_log = " << p.training_log.string() << "\n"
     << "blocklists = " << p.blocklists.string() << "\n"
     << "phrase_bank = " << p.phrase_bank.string() << "\n"
     << "qualitative = " << p.qualitative.string() << "\n"
     << "report = " << p.report.string() << "\n\n"
     << "[pairgen]\n"
     << "negatives_per_text = " << c.budget.negatives_per_text << "\n"
     << "hard_fraction = " << c.budget.hard_fraction << "\n"
     << "hard_stratum_quantile = " << c.budget.hard_stratum_quantile << "\n\n"
     << "[labeling]\n"
     << "provider = " << c.labeling.kind << "\n";
  if (!c.labeling.http.endpoint.empty()) {
    os << "endpoint = " << c.labeling.http.endpoint << "\n";
  }
  os << "model = " << c.labeling.http.model << "\n"
     << "max_attempts = " << c.labeling.max_attempts << "\n"
     << "parallelism = " << c.labeling.parallelism << "\n\n"
     << "[synthgen]\n"
     << "provider = " << c.synth.kind << "\n"
     << "implicit_per_topic = " << c.synth.implicit_per_topic << "\n"
     << "hard_negatives_per_topic = " << c.synth.hard_negatives_per_topic << "\n"
     << "max_rejections = " << c.synth.max_rejections << "\n"
     << "leak_rate = " << c.synth.mock_leak_rate << "\n";
  if (!c.synth.topics.empty()) {
    os << "topics = ";
    for (std::size_t i = 0; i < c.synth.topics.size(); ++i) {
      os << (i ? "," : "") << c.synth.topics[i];
    }
    os << "\n";
  }
  os << "\n[trainer]\n"
     << "epochs = " << c.train.epochs << "\n"
     << "learning_rate = " << c.train.learning_rate << "\n"
     << "batch_size = " << c.train.batch_size << "\n"
     << "max_sequence_length = " << c.train.max_sequence_length << "\n"
     << "patience = " << c.train.patience << "\n"
     << "val_fraction = " << c.train.val_fraction << "\n"
     << "class_weighting = "
     << (c.train.class_weighting == ClassWeighting::inverse_frequency
             ? "inverse_frequency"
             : "none")
     << "\n"
     << "threshold = " << c.train.threshold << "\n\n"
     << "[backend]\n"
     << "vocab = " << c.backend.vocab << "\n"
     << "dim = " << c.backend.dim << "\n"
     << "hidden = " << c.backend.hidden << "\n";
  return os.str();
}

namespace {

std::string with_commas(std::size_t n) {
  std::string s = std::to_string(n);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) {
    s.insert(static_cast<std::size_t>(i), ",");
  }
  return s;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) {
    throw ConfigError(std::string(what) + " not found: " + p.string());
  }
}

struct Session {
  PipelineConfig config;
  std::ostream& out;
  std::ostream& err;
};

ContextRegistry load_registry(const Session& s) {
  const auto path = s.config.resolve(s.config.paths.contexts);
  require_file(path, "contexts file");
  return ContextRegistry(read_contexts(path), {});
}

std::unique_ptr<EncoderBackend> make_backend(const PipelineConfig& c) {
  return std::make_unique<BagOfEmbeddingsBackend>(BagOfEmbeddingsBackend::Shape{
      c.backend.vocab, c.backend.dim, c.backend.hidden});
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- ingest -----------------------------------------------------------------

int cmd_ingest(Session& s, const fs::path& input, int stage_value) {
  const Stage stage = stage_from_int(stage_value);
  require_file(input, "input file");
  const auto texts_path = s.config.resolve(s.config.paths.texts);
  std::vector<TextSample> existing;
  if (fs::exists(texts_path)) existing = read_texts(texts_path);

  std::vector<TextSample> incoming;
  std::size_t n = 0;
  for_each_jsonl(input, [&](const Json& j) {
    TextSample t;
    t.text = j.at("text").get<std::string>();
    t.id = j.value("id", "s" + std::to_string(stage_value) + "-" +
                             input.stem().string() + "-" + std::to_string(n));
    t.stage = stage;
    t.reg = register_for(stage);
    t.source = j.value("source", input.filename().string());
    if (j.contains("topic_id")) t.topic_id = j.at("topic_id").get<std::string>();
    ++n;
    if (normalize_text(t.text).empty()) return;
    incoming.push_back(std::move(t));
  });
  std::vector<TextSample> all = existing;
  all.insert(all.end(), incoming.begin(), incoming.end());
  auto unique = dedup_samples(all);
  std::unordered_set<std::string> ids;
  for (const auto& t : unique) {
    if (!ids.insert(t.id).second) {
      throw InputError("duplicate text id '" + t.id + "'");
    }
  }
  write_texts(texts_path, unique);
  s.out << "ingested " << unique.size() - existing.size() << " of " << n
        << " texts into stage " << stage_value << " ("
        << n - (unique.size() - existing.size()) << " dropped)\n";
  return kExitOk;
}

// --- build-pairs --------------------------------------------------------------

int cmd_build_pairs(Session& s, std::optional<int> stage) {
  const auto registry = load_registry(s);
  const auto texts_path = s.config.resolve(s.config.paths.texts);
  require_file(texts_path, "texts file");
  auto texts = read_texts(texts_path);
  std::vector<TextSample> selected;
  for (const auto& t : texts) {
    if (t.reg == Register::implicit_synthetic) continue;
    if (stage && to_int(t.stage) != *stage) continue;
    selected.push_back(t);
  }
  const auto matrix = topic_similarity(registry.contexts());
  const auto pairs =
      build_candidate_pairs(selected, topics_from_samples(selected), registry,
                            matrix, s.config.budget, s.config.seed);
  write_pairs(s.config.resolve(s.config.paths.candidates), pairs);
  s.out << "built " << pairs.size() << " candidate pairs from "
        << selected.size() << " texts\n";
  return kExitOk;
}

// --- label ------------------------------------------------------------------

int cmd_label(Session& s, std::optional<int> stage) {
  const auto registry = load_registry(s);
  const auto texts_path = s.config.resolve(s.config.paths.texts);
  const auto cand_path = s.config.resolve(s.config.paths.candidates);
  require_file(texts_path, "texts file");
  require_file(cand_path, "candidates file");
  const auto texts = read_texts(texts_path);
  auto candidates = read_pairs(cand_path);
  if (stage) {
    std::erase_if(candidates,
                  [&](const PairExample& p) { return to_int(p.stage) != *stage; });
  }

  std::unique_ptr<LabelProvider> provider;
  if (s.config.labeling.kind == "http") {
    provider = std::make_unique<HttpLabelProvider>(s.config.labeling.http);
  } else {
    provider = std::make_unique<MockLabelProvider>(
        toy::topic_match_oracle(registry.contexts(), texts));
  }
  std::unordered_map<std::string, const TextSample*> by_id;
  for (const auto& t : texts) by_id[t.id] = &t;
  const TemplateRegistry templates;
  std::vector<LabelRequest> requests;
  for (const auto& p : candidates) {
    auto it = by_id.find(p.text_id);
    if (it == by_id.end()) {
      throw InputError("candidate references unknown text '" + p.text_id + "'");
    }
    requests.push_back(LabelRequest{registry.at(p.context_id).description,
                                    it->second->text, p.stage,
                                    templates.for_stage(p.stage).id});
  }
  LabelCache cache(s.config.resolve(s.config.paths.cache));
  RetryPolicy policy;
  policy.max_attempts = s.config.labeling.max_attempts;
  const auto results = label_batch(*provider, templates, requests, cache,
                                   s.config.labeling.parallelism, policy);

  std::vector<PairExample> labeled;
  std::size_t failures = 0, cached = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok()) {
      ++failures;
      s.err << "label failed for (" << candidates[i].context_id << ", "
            << candidates[i].text_id << "): " << results[i].error << '\n';
      continue;
    }
    cached += results[i].result->cached;
    PairExample p = candidates[i];
    p.label = results[i].result->label;
    p.label_source = LabelSource::oracle;
    labeled.push_back(std::move(p));
  }
  // Keep pairs labeled by other means (synthetic construction, manual).
  const auto pairs_path = s.config.resolve(s.config.paths.pairs);
  if (fs::exists(pairs_path)) {
    for (auto& p : read_pairs(pairs_path)) {
      if (p.label_source != LabelSource::oracle) labeled.push_back(std::move(p));
    }
  }
  write_pairs(pairs_path, labeled);
  s.out << "labeled " << results.size() - failures << " pairs (" << cached
        << " from cache, " << failures << " failed)\n";
  return failures ? kExitDomainError : kExitOk;
}

// --- synth ------------------------------------------------------------------

std::map<std::string, MockGenerationProvider::Bank> read_phrase_bank(
    const fs::path& path) {
  std::map<std::string, MockGenerationProvider::Bank> banks;
  for_each_jsonl(path, [&](const Json& j) {
    banks[j.at("topic_id").get<std::string>()] = MockGenerationProvider::Bank{
        j.at("implicit_words").get<std::vector<std::string>>(),
        j.at("negative_words").get<std::vector<std::string>>()};
  });
  return banks;
}

void write_phrase_bank(const fs::path& path,
                       const std::map<std::string, MockGenerationProvider::Bank>& banks) {
  std::vector<Json> records;
  for (const auto& [topic, bank] : banks) {
    records.push_back(Json{{"topic_id", topic},
                           {"implicit_words", bank.implicit_words},
                           {"negative_words", bank.negative_words}});
  }
  write_jsonl(path, records);
}

int cmd_synth(Session& s) {
  const auto registry = load_registry(s);
  const auto block_path = s.config.resolve(s.config.paths.blocklists);
  require_file(block_path, "blocklist file");
  const auto blocklists = read_blocklists(block_path);
  std::unique_ptr<GenerationProvider> provider;
  if (s.config.synth.kind == "http") {
    if (s.config.labeling.http.endpoint.empty()) {
      throw ConfigError("synthgen with the http provider needs labeling.endpoint");
    }
    provider = std::make_unique<HttpGenerationProvider>(s.config.labeling.http);
  } else {
    const auto bank_path = s.config.resolve(s.config.paths.phrase_bank);
    require_file(bank_path, "phrase bank");
    provider = std::make_unique<MockGenerationProvider>(
        read_phrase_bank(bank_path), s.config.seed, s.config.synth.mock_leak_rate);
  }

  std::vector<std::string> topics = s.config.synth.topics;
  if (topics.empty()) {
    for (const auto& b : blocklists) topics.push_back(b.topic_id());
  }
  std::vector<TextSample> new_texts;
  std::vector<PairExample> new_pairs;
  std::size_t rejected = 0;
  for (std::size_t k = 0; k < topics.size(); ++k) {
    const auto& topic = registry.at(topics[k]);
    auto bl = std::find_if(blocklists.begin(), blocklists.end(),
                           [&](const KeywordBlocklist& b) {
                             return b.topic_id() == topic.id;
                           });
    if (bl == blocklists.end()) {
      throw ConfigError("no blocklist for topic '" + topic.id + "'");
    }
    const auto style = static_cast<Style>(k % 3);
    auto pos = generate_implicit(
        *provider,
        GenerationSpec{topic.id, topic.description, s.config.synth.implicit_per_topic,
                       style, Polarity::implicit_positive},
        *bl, s.config.synth.max_rejections);
    auto neg = generate_hard_negatives(
        *provider, GenerationSpec{topic.id, topic.description,
                                  s.config.synth.hard_negatives_per_topic, style,
                                  Polarity::hard_negative});
    rejected += pos.rejected;
    for (auto* b : {&pos, &neg}) {
      new_texts.insert(new_texts.end(), b->samples.begin(), b->samples.end());
      new_pairs.insert(new_pairs.end(), b->pairs.begin(), b->pairs.end());
    }
  }

  const auto texts_path = s.config.resolve(s.config.paths.texts);
  std::vector<TextSample> texts;
  if (fs::exists(texts_path)) texts = read_texts(texts_path);
  std::erase_if(texts, [](const TextSample& t) {
    return t.reg == Register::implicit_synthetic;
  });
  texts.insert(texts.end(), new_texts.begin(), new_texts.end());
  write_texts(texts_path, texts);

  const auto pairs_path = s.config.resolve(s.config.paths.pairs);
  std::vector<PairExample> pairs;
  if (fs::exists(pairs_path)) pairs = read_pairs(pairs_path);
  std::erase_if(pairs, [](const PairExample& p) {
    return p.label_source == LabelSource::synthetic_construction;
  });
  pairs.insert(pairs.end(), new_pairs.begin(), new_pairs.end());
  write_pairs(pairs_path, pairs);
  s.out << "generated " << new_texts.size() << " stage-3 texts over "
        << topics.size() << " topics (" << rejected
        << " leaking candidates rejected)\n";
  return kExitOk;
}

// --- split / report -----------------------------------------------------------

void print_manifest(std::ostream& out, const DatasetManifest& m) {
  static const char* names[] = {"1. Formal text", "2. Informal text",
                                "3. Implicit text"};
  auto line = [&](const std::string& name, const StageCounts& c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-18s %8s %9s %9s %9s\n", name.c_str(),
                  with_commas(c.pair_count).c_str(),
                  with_commas(c.relevant_count).c_str(),
                  with_commas(c.not_relevant_count).c_str(),
                  with_commas(c.context_count).c_str());
    out << buf;
  };
  char head[160];
  std::snprintf(head, sizeof head, "%-18s %8s %9s %9s %9s\n", "Stage", "Pairs",
                "Relevant", "Not Rel.", "Contexts");
  out << head;
  for (std::size_t i = 0; i < m.stages.size(); ++i) line(names[i], m.stages[i]);
  line("Combined", m.totals);
}

int cmd_split(Session& s) {
  const auto pairs_path = s.config.resolve(s.config.paths.pairs);
  require_file(pairs_path, "pairs file");
  const auto pairs = read_pairs(pairs_path);
  const auto manifest = build_manifest(pairs);
  const auto split = stratified_split(pairs, s.config.train.val_fraction, s.config.seed);
  std::set<std::pair<std::string, std::string>> in_val;
  for (const auto& p : split.validation) in_val.emplace(p.context_id, p.text_id);
  std::vector<PairExample> ordered;
  ordered.reserve(pairs.size());
  for (auto p : pairs) {
    p.split = in_val.contains({p.context_id, p.text_id}) ? Split::validation
                                                         : Split::train;
    ordered.push_back(std::move(p));
  }
  write_pairs(s.config.resolve(s.config.paths.splits), ordered);
  write_manifest(s.config.resolve(s.config.paths.manifest), manifest);
  s.out << "split " << pairs.size() << " pairs: " << split.train.size()
        << " train, " << split.validation.size() << " validation\n";
  print_manifest(s.out, manifest);
  return kExitOk;
}

int cmd_report(Session& s, const std::optional<fs::path>& manifest_arg,
               const std::optional<fs::path>& pairs_arg) {
  const fs::path manifest_path =
      manifest_arg ? *manifest_arg : s.config.resolve(s.config.paths.manifest);
  DatasetManifest m;
  if (pairs_arg) {
    require_file(*pairs_arg, "pairs file");
    m = build_manifest(read_pairs(*pairs_arg));
    write_manifest(manifest_path, m);
  } else {
    require_file(manifest_path, "manifest");
    m = read_manifest(manifest_path);
  }
  print_manifest(s.out, m);
  return kExitOk;
}

// --- train / evaluate / predict ------------------------------------------------

struct SplitData {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> validation;
};

SplitData load_split_data(const Session& s) {
  const auto registry = load_registry(s);
  const auto texts_path = s.config.resolve(s.config.paths.texts);
  const auto splits_path = s.config.resolve(s.config.paths.splits);
  require_file(texts_path, "texts file");
  require_file(splits_path, "splits file");
  const auto texts = read_texts(texts_path);
  const auto pairs = read_pairs(splits_path);
  std::vector<PairExample> tr, va;
  for (const auto& p : pairs) {
    if (p.split == Split::train) tr.push_back(p);
    if (p.split == Split::validation) va.push_back(p);
  }
  return {materialize(tr, registry, texts), materialize(va, registry, texts)};
}

int cmd_train(Session& s) {
  const auto data = load_split_data(s);
  auto backend = make_backend(s.config);
  TrainOutputs outputs{s.config.resolve(s.config.paths.checkpoints),
                       s.config.resolve(s.config.paths.training_log)};
  TrainConfig tc = s.config.train;
  tc.seed = s.config.seed;
  const auto result = train(tc, data.train, data.validation, *backend, outputs);
  for (const auto& e : result.epochs) {
    s.out << "epoch " << e.epoch << "  loss " << fmt("%.4f", e.mean_loss)
          << "  acc " << format_percent(e.validation.accuracy) << "  prec "
          << format_percent(e.validation.precision) << "  rec "
          << format_percent(e.validation.recall) << "  f1 "
          << format_f1(e.validation.f1) << '\n';
  }
  s.out << "best epoch " << result.best_epoch
        << (result.early_stopped ? " (early stop)" : "") << '\n';
  return kExitOk;
}

int cmd_evaluate(Session& s, bool staged) {
  const auto data = load_split_data(s);
  const auto ckpt = s.config.resolve(s.config.paths.checkpoints);
  auto backend = make_backend(s.config);
  load_best_checkpoint(*backend, ckpt);
  const auto& tc = s.config.train;
  const auto m = evaluate(*backend, data.validation, tc.max_sequence_length,
                          tc.threshold);
  Json report{{"validation", to_json(m)}};
  s.out << "validation  n=" << m.matrix.total() << "  accuracy "
        << format_percent(m.accuracy) << "  precision "
        << format_percent(m.precision) << "  recall " << format_percent(m.recall)
        << "  f1 " << format_f1(m.f1) << '\n'
        << "confusion  TN " << m.matrix.true_negative << "  FP "
        << m.matrix.false_positive << "  FN " << m.matrix.false_negative
        << "  TP " << m.matrix.true_positive << '\n';

  const auto cases_path = s.config.resolve(s.config.paths.qualitative);
  if (fs::exists(cases_path)) {
    const auto cases = read_qualitative_cases(cases_path);
    const auto results = qualitative_suite(*backend, cases, tc.threshold,
                                           tc.max_sequence_length);
    report["qualitative"] = to_json(results);
    s.out << render_table(results);
  }

  if (staged) {
    std::vector<StageSubset> subsets;
    for (int st = 1; st <= 3; ++st) {
      StageSubset sub{st == 1 ? "formal" : (st == 2 ? "+informal" : "+implicit"), {}};
      for (const auto& e : data.train) {
        if (to_int(e.pair.stage) <= st) sub.train.push_back(e);
      }
      subsets.push_back(std::move(sub));
    }
    TrainConfig stc = tc;
    stc.seed = s.config.seed;
    const auto sr = staged_evaluation(subsets, data.validation, stc,
                                      [&] { return make_backend(s.config); });
    report["staged"] = to_json(sr);
    s.out << render_table(sr);
  }
  const auto report_path = s.config.resolve(s.config.paths.report);
  std::ofstream(report_path, std::ios::binary | std::ios::trunc)
      << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_predict(Session& s, const std::string& context, const std::string& text) {
  auto backend = make_backend(s.config);
  load_best_checkpoint(*backend, s.config.resolve(s.config.paths.checkpoints));
  const auto p = predict(*backend, context, text, s.config.train.threshold,
                         s.config.train.max_sequence_length);
  s.out << to_string(p.label) << '\t' << fmt("%.4f", p.score) << '\n';
  return kExitOk;
}

// --- toy-corpus / pipeline ------------------------------------------------------

int cmd_toy_corpus(Session& s, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto corpus = toy::make_toy_corpus();
  PipelineConfig c;
  c.seed = 7;
  c.train.learning_rate = 0.01;
  c.train.epochs = 8;
  c.train.patience = 2;
  c.synth.implicit_per_topic = corpus.spec.implicit_per_topic;
  c.synth.hard_negatives_per_topic = corpus.spec.hard_negatives_per_topic;
  c.synth.topics = corpus.implicit_topic_ids;
  write_contexts(out_dir / c.paths.contexts, corpus.contexts);
  write_texts(out_dir / c.paths.texts, corpus.texts);
  write_blocklists(out_dir / c.paths.blocklists, corpus.blocklists);
  write_phrase_bank(out_dir / c.paths.phrase_bank, corpus.banks);
  write_qualitative_cases(out_dir / c.paths.qualitative,
                          default_qualitative_cases());
  std::ofstream(out_dir / "relevancy.ini", std::ios::binary | std::ios::trunc)
      << render_config(c);
  s.out << "wrote toy corpus (" << corpus.contexts.size() << " contexts, "
        << corpus.texts.size() << " texts) to " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_pipeline(Session& s) {
  int rc = cmd_build_pairs(s, std::nullopt);
  if (rc == kExitOk) rc = cmd_label(s, std::nullopt);
  if (rc == kExitOk && fs::exists(s.config.resolve(s.config.paths.blocklists))) {
    rc = cmd_synth(s);
  }
  if (rc == kExitOk) rc = cmd_split(s);
  if (rc == kExitOk) rc = cmd_train(s);
  if (rc == kExitOk) rc = cmd_evaluate(s, false);
  return rc;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Context-conditioned relevancy dataset builder and classifier",
               "relevancy"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path, workdir;
  std::optional<std::uint64_t> seed;
  std::optional<int> stage;
  std::optional<std::size_t> parallelism;
  std::optional<double> threshold;
  bool no_class_weights = false;
  app.add_option("--config", config_path, "Pipeline configuration file");
  app.add_option("--workdir", workdir,
                 "Base directory for relative paths (default: config directory)");
  app.add_option("--seed", seed, "Seed for every random choice");
  app.add_option("--stage", stage, "Restrict to one stage")->check(CLI::Range(1, 3));
  app.add_option("--parallelism", parallelism, "Concurrent labeling requests")
      ->check(CLI::PositiveNumber);
  app.add_option("--threshold", threshold, "Decision threshold")
      ->check(CLI::Range(0.0, 1.0));
  app.add_flag("--no-class-weights", no_class_weights,
               "Train with an unweighted loss");

  std::string ingest_input;
  auto* ingest = app.add_subcommand("ingest", "Deduplicate raw texts into the texts file");
  ingest->add_option("--input", ingest_input, "Raw JSONL with a text field")->required();
  auto* build = app.add_subcommand("build-pairs", "Build candidate pairs with stratified negatives");
  auto* label = app.add_subcommand("label", "Label candidate pairs through the provider");
  auto* synth = app.add_subcommand("synth", "Generate stage-3 implicit texts and hard negatives");
  auto* split = app.add_subcommand("split", "Stratified train/validation split and manifest");
  auto* trn = app.add_subcommand("train", "Train the classifier");
  bool staged = false;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score the best checkpoint");
  evaluate_cmd->add_flag("--staged", staged, "Also run the cumulative stage comparison");
  std::string ctx_text, text_text;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one context/text pair");
  predict_cmd->add_option("--context", ctx_text, "Topic description")->required();
  predict_cmd->add_option("--text", text_text, "Candidate text")->required();
  std::optional<std::string> manifest_arg, pairs_arg;
  auto* report = app.add_subcommand("report", "Print dataset accounting");
  report->add_option("--manifest", manifest_arg, "Manifest JSON");
  report->add_option("--pairs", pairs_arg, "Build the manifest from this pairs file");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  std::string toy_out;
  auto* toy_cmd = app.add_subcommand("toy-corpus", "Write a generated demo corpus and config");
  toy_cmd->add_option("--out", toy_out, "Output directory")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    Session s{config_path ? load_config(*config_path) : PipelineConfig{}, out, err};
    if (workdir) s.config.workdir = *workdir;
    if (seed) s.config.seed = *seed;
    if (parallelism) s.config.labeling.parallelism = *parallelism;
    if (threshold) s.config.train.threshold = *threshold;
    if (no_class_weights) s.config.train.class_weighting = ClassWeighting::none;
    s.config.validate();

    if (ingest->parsed()) {
      if (!stage) throw ConfigError("ingest needs --stage");
      return cmd_ingest(s, ingest_input, *stage);
    }
    if (build->parsed()) return cmd_build_pairs(s, stage);
    if (label->parsed()) return cmd_label(s, stage);
    if (synth->parsed()) return cmd_synth(s);
    if (split->parsed()) return cmd_split(s);
    if (trn->parsed()) return cmd_train(s);
    if (evaluate_cmd->parsed()) return cmd_evaluate(s, staged);
    if (predict_cmd->parsed()) return cmd_predict(s, ctx_text, text_text);
    if (report->parsed()) {
      return cmd_report(s,
                        manifest_arg ? std::optional<fs::path>(*manifest_arg)
                                     : std::nullopt,
                        pairs_arg ? std::optional<fs::path>(*pairs_arg)
                                  : std::nullopt);
    }
    if (pipeline->parsed()) return cmd_pipeline(s);
    if (toy_cmd->parsed()) return cmd_toy_corpus(s, toy_out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace relevancy::cli

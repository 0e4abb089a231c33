#include "relevancy/jsonl.hpp"

#include <fstream>

#include "relevancy/errors.hpp"

namespace relevancy {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
    try {
      fn(j);
    } catch (const Json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    } catch (const Error& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Json>& records) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
}

Json to_json(const TopicContext& c) {
  return Json{{"id", c.id}, {"description", c.description},
              {"domain", c.domain}};
}

Json to_json(const TextSample& t) {
  Json j{{"id", t.id},
         {"text", t.text},
         {"register", to_string(t.reg)},
         {"stage", to_int(t.stage)},
         {"source", t.source}};
  if (t.topic_id) j["topic_id"] = *t.topic_id;
  return j;
}

Json to_json(const PairExample& p) {
  Json j{{"context_id", p.context_id}, {"text_id", p.text_id}};
  if (p.label) j["label"] = to_string(*p.label);
  j["stage"] = to_int(p.stage);
  j["split"] = to_string(p.split);
  j["label_source"] = to_string(p.label_source);
  return j;
}

namespace {

Json counts_json(const StageCounts& s) {
  return Json{{"pair_count", s.pair_count},
              {"relevant_count", s.relevant_count},
              {"not_relevant_count", s.not_relevant_count},
              {"context_count", s.context_count}};
}

StageCounts counts_from_json(const Json& j) {
  StageCounts s;
  s.pair_count = j.at("pair_count").get<std::size_t>();
  s.relevant_count = j.at("relevant_count").get<std::size_t>();
  s.not_relevant_count = j.at("not_relevant_count").get<std::size_t>();
  s.context_count = j.at("context_count").get<std::size_t>();
  return s;
}

}  // namespace

Json to_json(const DatasetManifest& m) {
  Json stages = Json::array();
  for (std::size_t i = 0; i < m.stages.size(); ++i) {
    Json s{{"stage", i + 1}};
    s.update(counts_json(m.stages[i]));
    stages.push_back(std::move(s));
  }
  return Json{{"stages", std::move(stages)}, {"totals", counts_json(m.totals)}};
}

TopicContext context_from_json(const Json& j) {
  return TopicContext{j.at("id").get<std::string>(),
                      j.at("description").get<std::string>(),
                      j.value("domain", std::string{})};
}

TextSample text_from_json(const Json& j) {
  TextSample t;
  t.id = j.at("id").get<std::string>();
  t.text = j.at("text").get<std::string>();
  t.stage = stage_from_int(j.at("stage").get<int>());
  t.reg = j.contains("register")
              ? parse_register(j.at("register").get<std::string>())
              : register_for(t.stage);
  t.source = j.value("source", std::string{});
  if (j.contains("topic_id") && !j.at("topic_id").is_null()) {
    t.topic_id = j.at("topic_id").get<std::string>();
  }
  return t;
}

PairExample pair_from_json(const Json& j) {
  PairExample p;
  p.context_id = j.at("context_id").get<std::string>();
  p.text_id = j.at("text_id").get<std::string>();
  if (j.contains("label") && !j.at("label").is_null()) {
    p.label = parse_label(j.at("label").get<std::string>());
  }
  p.stage = stage_from_int(j.at("stage").get<int>());
  p.split = parse_split(j.value("split", std::string("unassigned")));
  p.label_source = parse_label_source(
      j.value("label_source", std::string(p.label ? "manual" : "pending")));
  return p;
}

DatasetManifest manifest_from_json(const Json& j) {
  DatasetManifest m;
  for (const auto& s : j.at("stages")) {
    const auto stage = s.value("stage", std::size_t{0});
    if (stage < 1 || stage > kStageCount) {
      throw InputError("manifest stage out of range");
    }
    m.stages[stage - 1] = counts_from_json(s);
  }
  m.totals = counts_from_json(j.at("totals"));
  return m;
}

std::vector<TopicContext> read_contexts(const std::filesystem::path& path) {
  std::vector<TopicContext> out;
  for_each_jsonl(path, [&](const Json& j) { out.push_back(context_from_json(j)); });
  return out;
}

std::vector<TextSample> read_texts(const std::filesystem::path& path) {
  std::vector<TextSample> out;
  for_each_jsonl(path, [&](const Json& j) {
    out.push_back(text_from_json(j));
    validate(out.back());
  });
  return out;
}

std::vector<PairExample> read_pairs(const std::filesystem::path& path) {
  std::vector<PairExample> out;
  for_each_jsonl(path, [&](const Json& j) { out.push_back(pair_from_json(j)); });
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return manifest_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

template <typename T>
static std::vector<Json> to_records(const std::vector<T>& items) {
  std::vector<Json> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(to_json(it));
  return out;
}

void write_contexts(const std::filesystem::path& path,
                    const std::vector<TopicContext>& contexts) {
  write_jsonl(path, to_records(contexts));
}

void write_texts(const std::filesystem::path& path,
                 const std::vector<TextSample>& texts) {
  write_jsonl(path, to_records(texts));
}

void write_pairs(const std::filesystem::path& path,
                 const std::vector<PairExample>& pairs) {
  write_jsonl(path, to_records(pairs));
}

void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json(manifest).dump(2) << '\n';
}

}  // namespace relevancy

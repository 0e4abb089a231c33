#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "relevancy/corpus.hpp"

namespace relevancy {

using Json = nlohmann::ordered_json;

// Calls `fn` for each non-blank line of a JSONL file. Parse failures raise
// InputError with the file name and line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&)>& fn);
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Json>& records);

Json to_json(const TopicContext& c);
Json to_json(const TextSample& t);
Json to_json(const PairExample& p);
Json to_json(const DatasetManifest& m);

TopicContext context_from_json(const Json& j);
TextSample text_from_json(const Json& j);
PairExample pair_from_json(const Json& j);
DatasetManifest manifest_from_json(const Json& j);

std::vector<TopicContext> read_contexts(const std::filesystem::path& path);
std::vector<TextSample> read_texts(const std::filesystem::path& path);
std::vector<PairExample> read_pairs(const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

void write_contexts(const std::filesystem::path& path,
                    const std::vector<TopicContext>& contexts);
void write_texts(const std::filesystem::path& path,
                 const std::vector<TextSample>& texts);
void write_pairs(const std::filesystem::path& path,
                 const std::vector<PairExample>& pairs);
void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);

}  // namespace relevancy

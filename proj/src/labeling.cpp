#include "relevancy/labeling.hpp"

#include <atomic>
#include <cmath>
#include <ctime>
#include <thread>

#include "relevancy/errors.hpp"
#include "relevancy/jsonl.hpp"
#include "relevancy/random.hpp"

namespace relevancy {

namespace {

constexpr std::string_view kContextSlot = "{context}";
constexpr std::string_view kTextSlot = "{text}";

constexpr std::string_view kVerdictInstruction =
    "Answer with exactly one token: RELEVANT or NOT_RELEVANT.";

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void validate_template(const PromptTemplate& tmpl) {
  if (tmpl.instruction.find(kContextSlot) == std::string::npos) {
    throw TemplateError("template '" + tmpl.id + "' lacks {context}");
  }
  if (tmpl.instruction.find(kTextSlot) == std::string::npos) {
    throw TemplateError("template '" + tmpl.id + "' lacks {text}");
  }
  if (tmpl.stage != Stage::one &&
      tmpl.instruction.find(kRegisterNeutralityClause) == std::string::npos) {
    throw TemplateError("template '" + tmpl.id + "' for stage " +
                        std::to_string(to_int(tmpl.stage)) +
                        " lacks the register-neutrality clause");
  }
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const LabelRequest& request) {
  validate_template(tmpl);
  // Single left-to-right pass so substituted values are never re-expanded.
  const std::string& in = tmpl.instruction;
  std::string out;
  out.reserve(in.size() + request.context_description.size() +
              request.text.size());
  for (std::size_t i = 0; i < in.size();) {
    if (in.compare(i, kContextSlot.size(), kContextSlot) == 0) {
      out += request.context_description;
      i += kContextSlot.size();
    } else if (in.compare(i, kTextSlot.size(), kTextSlot) == 0) {
      out += request.text;
      i += kTextSlot.size();
    } else {
      out += in[i++];
    }
  }
  return out;
}

TemplateRegistry::TemplateRegistry() {
  const std::string verdict(kVerdictInstruction);
  const std::string clause(kRegisterNeutralityClause);
  add({"formal-v1", Stage::one,
       "Decide whether the news title is relevant to the topic.\n"
       "Topic: {context}\nText: {text}\n" + verdict});
  add({"informal-v1", Stage::two,
       "Decide whether the social media post is relevant to the topic. " +
           clause + "\nTopic: {context}\nText: {text}\n" + verdict});
  add({"implicit-v1", Stage::three,
       "Decide whether the text is relevant to the topic, even if it never "
       "names the topic directly. " +
           clause + "\nTopic: {context}\nText: {text}\n" + verdict});
}

void TemplateRegistry::add(PromptTemplate tmpl) {
  validate_template(tmpl);
  default_for_stage_.try_emplace(to_int(tmpl.stage), tmpl.id);
  templates_[tmpl.id] = std::move(tmpl);
}

const PromptTemplate& TemplateRegistry::at(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw TemplateError("unknown prompt template '" + id + "'");
  }
  return it->second;
}

const PromptTemplate& TemplateRegistry::for_stage(Stage stage) const {
  auto it = default_for_stage_.find(to_int(stage));
  if (it == default_for_stage_.end()) {
    throw TemplateError("no template for stage " +
                        std::to_string(to_int(stage)));
  }
  return at(it->second);
}

Label parse_verdict(std::string_view response) {
  const auto first = response.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    throw ProtocolError("empty provider response");
  }
  const auto last = response.find_last_not_of(" \t\r\n");
  const auto token = response.substr(first, last - first + 1);
  if (token == kVerdictRelevant) return Label::relevant;
  if (token == kVerdictNotRelevant) return Label::not_relevant;
  throw ProtocolError("malformed provider verdict: '" + std::string(token) +
                      "'");
}

MockLabelProvider::MockLabelProvider(Oracle oracle, std::string id)
    : oracle_(std::move(oracle)), id_(std::move(id)) {}

std::string MockLabelProvider::complete(const ProviderCall& call) {
  if (call.request == nullptr) throw ProviderError("mock needs the request");
  {
    std::lock_guard lock(mu_);
    log_.push_back(call.request->text);
  }
  return std::string(oracle_(*call.request) == Label::relevant
                         ? kVerdictRelevant
                         : kVerdictNotRelevant);
}

std::size_t MockLabelProvider::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::vector<std::string> MockLabelProvider::call_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

LabelCache::LabelCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) {
    for_each_jsonl(*path_, [&](const Json& j) {
      entries_[j.at("key").get<std::string>()] =
          CacheEntry{parse_label(j.at("label").get<std::string>()),
                     j.value("provider_id", std::string{}),
                     j.value("timestamp", std::string{})};
    });
  } else if (path_->has_parent_path()) {
    std::filesystem::create_directories(path_->parent_path());
  }
  out_.open(*path_, std::ios::app | std::ios::binary);
  if (!out_) throw InputError("cannot open label cache " + path_->string());
}

std::string LabelCache::key(const LabelRequest& request) {
  // Normalized text never contains a tab, so it is a safe separator.
  return request.prompt_template_id + '\t' +
         normalize_text(request.context_description) + '\t' +
         normalize_text(request.text);
}

std::optional<CacheEntry> LabelCache::get(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LabelCache::put(const std::string& key, const CacheEntry& entry) {
  std::unique_lock lock(mu_);
  entries_[key] = entry;
  if (out_.is_open()) {
    Json j{{"key", key},
           {"label", to_string(entry.label)},
           {"provider_id", entry.provider_id},
           {"timestamp", entry.timestamp}};
    out_ << j.dump() << '\n';
    out_.flush();
  }
}

std::size_t LabelCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::chrono::milliseconds RetryPolicy::delay(std::size_t retry,
                                             std::uint64_t salt) const {
  const double base = static_cast<double>(initial_backoff.count()) *
                      std::pow(factor, static_cast<double>(retry - 1));
  SplitMix64 rng(mix_seed(salt, retry));
  const double scale = 1.0 + jitter * (2.0 * rng.uniform() - 1.0);
  return std::chrono::milliseconds(std::llround(base * scale));
}

LabelResult label_pair(LabelProvider& provider, const TemplateRegistry& templates,
                       const LabelRequest& request, LabelCache& cache,
                       const RetryPolicy& policy) {
  if (normalize_text(request.context_description).empty() ||
      normalize_text(request.text).empty()) {
    throw InputError("label request needs a non-empty context and text");
  }
  const auto& tmpl = templates.at(request.prompt_template_id);
  const std::string key = LabelCache::key(request);
  if (auto hit = cache.get(key)) {
    return LabelResult{hit->label, hit->provider_id, true, 0};
  }

  const ProviderCall call{render_prompt(tmpl, request), &request};
  const std::size_t max_attempts = std::max<std::size_t>(policy.max_attempts, 1);
  std::string last_failure;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    std::string response;
    try {
      response = provider.complete(call);
    } catch (const ProviderError& e) {
      last_failure = e.what();
      if (attempt < max_attempts) {
        const auto wait = policy.delay(attempt, fnv1a64(key));
        if (policy.sleep) {
          policy.sleep(wait);
        } else {
          std::this_thread::sleep_for(wait);
        }
      }
      continue;
    }
    const Label label = parse_verdict(response);
    cache.put(key, CacheEntry{label, provider.id(), utc_timestamp()});
    return LabelResult{label, provider.id(), false, attempt};
  }
  throw LabelingError("provider '" + provider.id() + "' failed after " +
                      std::to_string(max_attempts) +
                      " attempts: " + last_failure);
}

std::vector<BatchItem> label_batch(LabelProvider& provider,
                                   const TemplateRegistry& templates,
                                   std::span<const LabelRequest> requests,
                                   LabelCache& cache, std::size_t parallelism,
                                   const RetryPolicy& policy) {
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  std::vector<BatchItem> results(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i].result =
            label_pair(provider, templates, requests[i], cache, policy);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const std::size_t workers = std::min(parallelism, requests.size());
  if (workers <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  return results;
}

}  // namespace relevancy

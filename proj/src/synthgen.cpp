#include "relevancy/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "relevancy/errors.hpp"
#include "relevancy/jsonl.hpp"
#include "relevancy/random.hpp"

namespace relevancy {

namespace {

// Function words skipped when seeding blocklists from descriptions.
const std::set<std::string, std::less<>> kStopwords = {
    "and", "or", "of", "the", "a", "an", "in", "on", "for", "to", "with",
    "dan", "atau", "di", "ke", "dari", "yang", "untuk", "dengan", "pada",
    "&"};

bool is_separator(unsigned char c) {
  return c < 0x80 && !std::isalnum(c);
}

}  // namespace

KeywordBlocklist::KeywordBlocklist(std::string topic_id,
                                   std::span<const std::string> keywords)
    : topic_id_(std::move(topic_id)) {
  for (const auto& k : keywords) {
    auto norm = normalize_text(k);
    if (norm.empty()) {
      throw ConfigError("blocklist for '" + topic_id_ +
                        "' contains an empty keyword");
    }
    keywords_.insert(std::move(norm));
  }
}

KeywordBlocklist blocklist_from_description(
    const TopicContext& context, std::span<const std::string> extra) {
  std::vector<std::string> words;
  for (auto& w : word_tokens(context.description)) {
    if (!kStopwords.contains(w)) words.push_back(std::move(w));
  }
  words.insert(words.end(), extra.begin(), extra.end());
  return KeywordBlocklist(context.id, words);
}

std::vector<KeywordBlocklist> read_blocklists(const std::filesystem::path& path) {
  std::vector<KeywordBlocklist> out;
  for_each_jsonl(path, [&](const Json& j) {
    out.emplace_back(j.at("topic_id").get<std::string>(),
                     j.at("keywords").get<std::vector<std::string>>());
  });
  return out;
}

void write_blocklists(const std::filesystem::path& path,
                      std::span<const KeywordBlocklist> blocklists) {
  std::vector<Json> records;
  for (const auto& b : blocklists) {
    records.push_back(Json{{"topic_id", b.topic_id()},
                           {"keywords", std::vector<std::string>(
                                            b.keywords().begin(),
                                            b.keywords().end())}});
  }
  write_jsonl(path, records);
}

std::vector<std::string> word_tokens(std::string_view text) {
  const std::string norm = normalize_text(text);
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : norm) {
    if (is_separator(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

LeakCheck keyword_leak_check(std::string_view text,
                             const KeywordBlocklist& blocklist) {
  if (blocklist.empty()) return LeakPass{};
  const auto tokens = word_tokens(text);
  std::vector<std::string> matched;
  for (const auto& kw : blocklist.keywords()) {
    const auto kw_tokens = word_tokens(kw);
    if (kw_tokens.empty() || kw_tokens.size() > tokens.size()) continue;
    const auto hit = std::search(tokens.begin(), tokens.end(),
                                 kw_tokens.begin(), kw_tokens.end());
    if (hit != tokens.end()) matched.push_back(kw);
  }
  if (matched.empty()) return LeakPass{};
  return LeakViolation{std::move(matched)};
}

std::string_view to_string(Style s) {
  switch (s) {
    case Style::personal_experience: return "personal-experience";
    case Style::complaint: return "complaint";
    case Style::observation: return "observation";
  }
  return "personal-experience";
}

Style parse_style(std::string_view s) {
  if (s == "personal-experience") return Style::personal_experience;
  if (s == "complaint") return Style::complaint;
  if (s == "observation") return Style::observation;
  throw ConfigError("unknown style '" + std::string(s) + "'");
}

std::string render_generation_prompt(const GenerationSpec& spec,
                                     const KeywordBlocklist* blocklist) {
  std::ostringstream os;
  if (spec.polarity == Polarity::implicit_positive) {
    os << "Write one short Indonesian social media post that is relevant to "
          "the topic \""
       << spec.topic_description << "\", phrased as a "
       << to_string(spec.style)
       << ". Do not use any obvious topic keywords";
    if (blocklist != nullptr && !blocklist->empty()) {
      os << "; in particular avoid:";
      for (const auto& k : blocklist->keywords()) os << ' ' << k;
    }
    os << ". Output only the post.";
  } else {
    os << "Write one short Indonesian social media post that looks related to "
          "the topic \""
       << spec.topic_description
       << "\" at first glance but is actually about a different topic, "
          "phrased as a "
       << to_string(spec.style) << ". Output only the post.";
  }
  return os.str();
}

MockGenerationProvider::MockGenerationProvider(std::map<std::string, Bank> banks,
                                               std::uint64_t seed,
                                               double leak_rate)
    : banks_(std::move(banks)), seed_(seed), leak_rate_(leak_rate) {}

std::string MockGenerationProvider::generate(const GenerationRequest& request) {
  const auto& spec = *request.spec;
  auto it = banks_.find(spec.topic_id);
  if (it == banks_.end()) {
    throw ProviderError("mock generator has no phrase bank for '" +
                        spec.topic_id + "'");
  }
  const auto& pool = spec.polarity == Polarity::implicit_positive
                         ? it->second.implicit_words
                         : it->second.negative_words;
  if (pool.empty()) {
    throw ProviderError("empty phrase bank for '" + spec.topic_id + "'");
  }
  SplitMix64 rng(mix_seed(seed_ ^ fnv1a64(spec.topic_id),
                          request.attempt * 4 + static_cast<int>(spec.polarity)));
  const std::size_t words = 4 + rng.below(4);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words; ++i) out.push_back(pool[rng.below(pool.size())]);
  bool leaked = false;
  if (!request.avoid.empty() && rng.uniform() < leak_rate_) {
    out.insert(out.begin() + static_cast<long>(rng.below(out.size() + 1)),
               request.avoid[rng.below(request.avoid.size())]);
    leaked = true;
  }
  {
    std::lock_guard lock(mu_);
    ++calls_;
    if (leaked) ++leaked_;
  }
  std::string text;
  for (const auto& w : out) {
    if (!text.empty()) text += ' ';
    text += w;
  }
  return text;
}

std::size_t MockGenerationProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t MockGenerationProvider::leaked_candidates() const {
  std::lock_guard lock(mu_);
  return leaked_;
}

HttpGenerationProvider::HttpGenerationProvider(HttpProviderConfig config)
    : config_(std::move(config)) {}

std::string HttpGenerationProvider::generate(const GenerationRequest& request) {
  auto text = HttpLabelProvider::post_prompt(config_, request.prompt);
  const auto first = text.find_first_not_of(" \t\r\n\"");
  const auto last = text.find_last_not_of(" \t\r\n\"");
  if (first == std::string::npos) throw ProtocolError("empty generation");
  return text.substr(first, last - first + 1);
}

namespace {

TextSample make_sample(const GenerationSpec& spec, const std::string& provider_id,
                       std::string text, std::size_t index) {
  TextSample s;
  const char* tag =
      spec.polarity == Polarity::implicit_positive ? "implicit" : "hardneg";
  s.id = spec.topic_id + "-s3-" + tag + "-" + std::to_string(index);
  s.text = std::move(text);
  s.reg = Register::implicit_synthetic;
  s.stage = Stage::three;
  s.source = "synthetic:" + provider_id + ":" + std::string(to_string(spec.style));
  // A hard negative is, by construction, not about the spec topic.
  if (spec.polarity == Polarity::implicit_positive) s.topic_id = spec.topic_id;
  return s;
}

PairExample make_pair(const GenerationSpec& spec, const TextSample& s,
                      Label label) {
  PairExample p;
  p.context_id = spec.topic_id;
  p.text_id = s.id;
  p.label = label;
  p.stage = Stage::three;
  p.split = Split::unassigned;
  p.label_source = LabelSource::synthetic_construction;
  return p;
}

std::string call_generator(GenerationProvider& provider,
                           const GenerationRequest& request) {
  try {
    return provider.generate(request);
  } catch (const ProviderError& e) {
    throw GenerationError("generation for '" + request.spec->topic_id +
                          "' failed: " + e.what());
  } catch (const ProtocolError& e) {
    throw GenerationError("generation for '" + request.spec->topic_id +
                          "' failed: " + e.what());
  }
}

}  // namespace

SyntheticBatch generate_implicit(GenerationProvider& provider,
                                 const GenerationSpec& spec,
                                 const KeywordBlocklist& blocklist,
                                 std::size_t max_rejections) {
  if (spec.polarity != Polarity::implicit_positive) {
    throw ConfigError("generate_implicit needs an implicit_positive spec");
  }
  SyntheticBatch batch;
  GenerationRequest request;
  request.spec = &spec;
  request.prompt = render_generation_prompt(spec, &blocklist);
  request.avoid.assign(blocklist.keywords().begin(), blocklist.keywords().end());
  while (batch.samples.size() < spec.count) {
    std::string text = call_generator(provider, request);
    ++request.attempt;
    const auto check = keyword_leak_check(text, blocklist);
    if (const auto* v = std::get_if<LeakViolation>(&check)) {
      ++batch.rejected;
      for (const auto& k : v->matched) ++batch.leak_counts[k];
      if (batch.rejected > max_rejections) {
        std::ostringstream os;
        os << "rejection budget exhausted for '" << spec.topic_id << "': "
           << batch.rejected << " leaking candidates, "
           << batch.samples.size() << "/" << spec.count << " accepted; leaks:";
        for (const auto& [k, n] : batch.leak_counts) os << ' ' << k << '=' << n;
        throw GenerationError(os.str());
      }
      continue;
    }
    if (normalize_text(text).empty()) {
      throw GenerationError("generator returned an empty text for '" +
                            spec.topic_id + "'");
    }
    batch.samples.push_back(make_sample(spec, provider.id(), std::move(text),
                                        batch.samples.size()));
    batch.pairs.push_back(make_pair(spec, batch.samples.back(), Label::relevant));
  }
  return batch;
}

SyntheticBatch generate_hard_negatives(GenerationProvider& provider,
                                       const GenerationSpec& spec) {
  if (spec.polarity != Polarity::hard_negative) {
    throw ConfigError("generate_hard_negatives needs a hard_negative spec");
  }
  SyntheticBatch batch;
  GenerationRequest request;
  request.spec = &spec;
  request.prompt = render_generation_prompt(spec, nullptr);
  for (std::size_t i = 0; i < spec.count; ++i) {
    request.attempt = i;
    std::string text = call_generator(provider, request);
    if (normalize_text(text).empty()) {
      throw GenerationError("generator returned an empty text for '" +
                            spec.topic_id + "'");
    }
    batch.samples.push_back(make_sample(spec, provider.id(), std::move(text), i));
    batch.pairs.push_back(
        make_pair(spec, batch.samples.back(), Label::not_relevant));
  }
  return batch;
}

}  // namespace relevancy

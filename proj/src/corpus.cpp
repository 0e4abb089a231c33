#include "relevancy/corpus.hpp"

#include <unicode/normalizer2.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "relevancy/errors.hpp"
#include "relevancy/random.hpp"

namespace relevancy {

std::string_view to_string(Register r) {
  switch (r) {
    case Register::formal: return "formal";
    case Register::informal: return "informal";
    case Register::implicit_synthetic: return "implicit-synthetic";
  }
  return "formal";
}

std::string_view to_string(Label l) {
  return l == Label::relevant ? "relevant" : "not_relevant";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::pending: return "pending";
    case LabelSource::oracle: return "oracle";
    case LabelSource::synthetic_construction: return "synthetic-construction";
    case LabelSource::manual: return "manual";
  }
  return "pending";
}

Register parse_register(std::string_view s) {
  if (s == "formal") return Register::formal;
  if (s == "informal") return Register::informal;
  if (s == "implicit-synthetic") return Register::implicit_synthetic;
  throw InputError("unknown register '" + std::string(s) + "'");
}

Label parse_label(std::string_view s) {
  if (s == "relevant") return Label::relevant;
  if (s == "not_relevant") return Label::not_relevant;
  throw InputError("unknown label '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "unassigned") return Split::unassigned;
  throw InputError("unknown split '" + std::string(s) + "'");
}

LabelSource parse_label_source(std::string_view s) {
  if (s == "pending") return LabelSource::pending;
  if (s == "oracle") return LabelSource::oracle;
  if (s == "synthetic-construction") return LabelSource::synthetic_construction;
  if (s == "manual") return LabelSource::manual;
  throw InputError("unknown label_source '" + std::string(s) + "'");
}

Stage stage_from_int(int value) {
  if (value < 1 || value > 3) {
    throw InputError("stage must be 1, 2 or 3, got " + std::to_string(value));
  }
  return static_cast<Stage>(value);
}

Register register_for(Stage s) {
  switch (s) {
    case Stage::one: return Register::formal;
    case Stage::two: return Register::informal;
    case Stage::three: return Register::implicit_synthetic;
  }
  return Register::formal;
}

ContextRegistry::ContextRegistry(std::vector<TopicContext> contexts,
                                 std::vector<std::string> domains)
    : contexts_(std::move(contexts)), domains_(std::move(domains)) {
  std::unordered_set<std::string> seen;
  const std::unordered_set<std::string> domain_set(domains_.begin(),
                                                   domains_.end());
  for (auto& c : contexts_) {
    if (c.id.empty()) throw InputError("context with empty id");
    if (normalize_text(c.description).empty()) {
      throw InputError("context '" + c.id + "' has an empty description");
    }
    if (!seen.insert(c.id).second) {
      throw InputError("duplicate context id '" + c.id + "'");
    }
    if (!domain_set.empty() && !domain_set.contains(c.domain)) {
      throw InputError("context '" + c.id + "' has undeclared domain '" +
                       c.domain + "'");
    }
  }
}

const TopicContext* ContextRegistry::find(std::string_view id) const {
  for (const auto& c : contexts_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const TopicContext& ContextRegistry::at(std::string_view id) const {
  if (const auto* c = find(id)) return *c;
  throw InputError("unknown context id '" + std::string(id) + "'");
}

void validate(const TextSample& sample) {
  if (normalize_text(sample.text).empty()) {
    throw InputError("text '" + sample.id + "' is empty after normalization");
  }
  if (sample.reg != register_for(sample.stage)) {
    throw InputError("text '" + sample.id + "' has register " +
                     std::string(to_string(sample.reg)) + " but stage " +
                     std::to_string(to_int(sample.stage)));
  }
}

namespace {

bool is_space(UChar32 c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v' || u_isUWhiteSpace(c);
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  if (raw.empty()) return {};
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  src.toLower(icu::Locale::getRoot());
  icu::UnicodeString composed = nfc->normalize(src, status);
  if (U_FAILURE(status)) composed = src;

  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < composed.length();) {
    UChar32 c = composed.char32At(i);
    i += U16_LENGTH(c);
    if (is_space(c)) {
      pending_space = !out.isEmpty();
      continue;
    }
    if (pending_space) {
      out.append(static_cast<UChar>(' '));
      pending_space = false;
    }
    out.append(c);
  }
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::vector<TextSample> dedup_samples(std::span<const TextSample> samples) {
  std::unordered_set<std::string> seen;
  std::vector<TextSample> out;
  for (const auto& s : samples) {
    if (seen.insert(normalize_text(s.text)).second) out.push_back(s);
  }
  return out;
}

DatasetManifest build_manifest(std::span<const PairExample> pairs) {
  DatasetManifest m;
  std::vector<std::set<std::string>> stage_contexts(kStageCount);
  std::set<std::string> all_contexts;
  for (const auto& p : pairs) {
    if (!p.label) {
      throw AccountingError("unlabeled pair (" + p.context_id + ", " +
                            p.text_id + ")");
    }
    auto& rec = m.stages.at(static_cast<std::size_t>(to_int(p.stage) - 1));
    ++rec.pair_count;
    if (*p.label == Label::relevant) {
      ++rec.relevant_count;
    } else {
      ++rec.not_relevant_count;
    }
    stage_contexts[static_cast<std::size_t>(to_int(p.stage) - 1)].insert(
        p.context_id);
    all_contexts.insert(p.context_id);
  }
  for (std::size_t i = 0; i < kStageCount; ++i) {
    m.stages[i].context_count = stage_contexts[i].size();
    m.totals.pair_count += m.stages[i].pair_count;
    m.totals.relevant_count += m.stages[i].relevant_count;
    m.totals.not_relevant_count += m.stages[i].not_relevant_count;
  }
  m.totals.context_count = all_contexts.size();
  return m;
}

std::pair<std::size_t, std::size_t> apportion_validation(
    std::size_t not_relevant_count, std::size_t relevant_count,
    double val_fraction) {
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) {
    throw ConfigError("val_fraction must lie in [0, 1]");
  }
  const std::size_t total = not_relevant_count + relevant_count;
  const auto target =
      static_cast<std::size_t>(std::llround(val_fraction * double(total)));
  const std::array<std::size_t, 2> counts{not_relevant_count, relevant_count};
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double exact = val_fraction * double(counts[i]);
    quota[i] = static_cast<std::size_t>(std::floor(exact));
    // Guard against representation error such as 0.15 * 31360 = 4703.999...
    if (std::abs(exact - std::round(exact)) < 1e-9) {
      quota[i] = static_cast<std::size_t>(std::llround(exact));
    }
    quota[i] = std::min(quota[i], counts[i]);
    remainder[i] = exact - double(quota[i]);
    assigned += quota[i];
  }
  // Largest remainder first; ties go to the relevant class.
  std::array<std::size_t, 2> order{1, 0};
  if (remainder[0] > remainder[1]) order = {0, 1};
  for (std::size_t k = 0; assigned < target && k < 2 * 2; ++k) {
    const std::size_t i = order[k % 2];
    if (quota[i] < counts[i]) {
      ++quota[i];
      ++assigned;
    }
  }
  return {quota[0], quota[1]};
}

SplitResult stratified_split(std::span<const PairExample> pairs,
                             double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) {
    throw ConfigError("val_fraction must lie in [0, 1], got " +
                      std::to_string(val_fraction));
  }
  std::array<std::vector<std::size_t>, 2> by_label;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].label) {
      throw InputError("cannot split unlabeled pair (" + pairs[i].context_id +
                       ", " + pairs[i].text_id + ")");
    }
    by_label[static_cast<std::size_t>(*pairs[i].label)].push_back(i);
  }
  const auto [nr_quota, r_quota] = apportion_validation(
      by_label[0].size(), by_label[1].size(), val_fraction);
  const std::array<std::size_t, 2> quota{nr_quota, r_quota};

  std::vector<bool> in_validation(pairs.size(), false);
  for (std::size_t l = 0; l < 2; ++l) {
    SplitMix64 rng(mix_seed(seed, l + 1));
    std::vector<std::size_t> members = by_label[l];
    seeded_shuffle(std::span<std::size_t>(members), rng);
    for (std::size_t k = 0; k < quota[l]; ++k) in_validation[members[k]] = true;
  }

  SplitResult out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairExample p = pairs[i];
    p.split = in_validation[i] ? Split::validation : Split::train;
    (in_validation[i] ? out.validation : out.train).push_back(std::move(p));
  }
  return out;
}

}  // namespace relevancy

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "relevancy/corpus.hpp"
#include "relevancy/errors.hpp"
#include "relevancy/jsonl.hpp"
#include "relevancy/random.hpp"

namespace relevancy {
namespace {

TextSample sample(std::string id, std::string text, Stage stage = Stage::one) {
  return TextSample{std::move(id), std::move(text), register_for(stage), stage,
                    "test", std::nullopt};
}

PairExample pair(std::string ctx, std::string text, Label label, Stage stage) {
  PairExample p;
  p.context_id = std::move(ctx);
  p.text_id = std::move(text);
  p.label = label;
  p.stage = stage;
  p.label_source = LabelSource::manual;
  return p;
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_text("BBM  Naik Lagi "), "bbm naik lagi");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(normalize_text("harga\tcabai\nnaik"), "harga cabai naik");
}

TEST(Normalize, UnicodeWhitespaceAndComposition) {
  EXPECT_EQ(normalize_text("CafÉ  Kopi"), "café kopi");
  // e + combining acute composes to the precomposed form.
  EXPECT_EQ(normalize_text("cafe\u0301"), "caf\u00e9");
}

TEST(Normalize, Idempotent) {
  for (const char* s : {"  A  b\tC ", "ÁÉ  x", "BBM naik lagi!!", ""}) {
    const auto once = normalize_text(s);
    EXPECT_EQ(normalize_text(once), once);
  }
}

TEST(Dedup, Examples) {
  std::vector<TextSample> in = {sample("a", "BBM naik lagi"),
                                sample("b", "bbm  naik lagi"),
                                sample("c", "harga cabai naik")};
  const auto out = dedup_samples(in);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].id, "a");
  EXPECT_EQ(out[1].id, "c");
  EXPECT_TRUE(dedup_samples({}).empty());
}

TEST(Dedup, MatchesSetOracle) {
  const std::vector<std::string> raw = {
      "Harga naik", "harga  naik", "BBM langka", "bbm langka ", "banjir",
      "Banjir", "macet parah", "listrik mati", "gaji telat", "sekolah mahal"};
  std::vector<TextSample> in;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    in.push_back(sample("t" + std::to_string(i), raw[i]));
  }
  std::set<std::string> oracle;
  for (const auto& s : raw) oracle.insert(normalize_text(s));
  const auto out = dedup_samples(in);
  EXPECT_EQ(out.size(), oracle.size());
  EXPECT_EQ(out.size(), 7u);
  std::set<std::string> seen;
  for (const auto& t : out) EXPECT_TRUE(seen.insert(normalize_text(t.text)).second);
}

TEST(Validate, RegisterMustMatchStage) {
  auto t = sample("x", "teks");
  t.reg = Register::informal;
  EXPECT_THROW(validate(t), InputError);
  EXPECT_NO_THROW(validate(sample("y", "teks", Stage::three)));
}

TEST(Registry, RejectsDuplicatesAndUnknownDomains) {
  EXPECT_THROW(ContextRegistry({{"a", "A", "d"}, {"a", "B", "d"}}, {"d"}),
               InputError);
  EXPECT_THROW(ContextRegistry({{"a", "A", "x"}}, {"d"}), InputError);
  ContextRegistry r({{"a", "A", "d"}}, {"d"});
  EXPECT_EQ(r.at("a").description, "A");
  EXPECT_EQ(r.find("zz"), nullptr);
}

TEST(Manifest, EmptyIsZero) {
  EXPECT_EQ(build_manifest({}), DatasetManifest{});
}

TEST(Manifest, ToyPairsMatchCountingOracle) {
  const std::vector<PairExample> pairs = {
      pair("c1", "t1", Label::relevant, Stage::one),
      pair("c2", "t1", Label::not_relevant, Stage::one),
      pair("c1", "t2", Label::not_relevant, Stage::two),
      pair("c3", "t3", Label::relevant, Stage::two),
      pair("c3", "t4", Label::relevant, Stage::three),
      pair("c2", "t5", Label::not_relevant, Stage::three),
  };
  // Brute-force tally.
  std::vector<StageCounts> expect(3);
  std::vector<std::set<std::string>> ctx(3);
  std::set<std::string> all_ctx;
  for (const auto& p : pairs) {
    auto& c = expect[to_int(p.stage) - 1];
    ++c.pair_count;
    (*p.label == Label::relevant ? c.relevant_count : c.not_relevant_count)++;
    ctx[to_int(p.stage) - 1].insert(p.context_id);
    all_ctx.insert(p.context_id);
  }
  for (int s = 0; s < 3; ++s) expect[s].context_count = ctx[s].size();
  const auto m = build_manifest(pairs);
  for (int s = 0; s < 3; ++s) EXPECT_EQ(m.stages[s], expect[s]) << s;
  EXPECT_EQ(m.totals.pair_count, 6u);
  EXPECT_EQ(m.totals.relevant_count, 3u);
  EXPECT_EQ(m.totals.not_relevant_count, 3u);
  EXPECT_EQ(m.totals.context_count, all_ctx.size());
}

TEST(Manifest, UnlabeledPairIsNamed) {
  PairExample p;
  p.context_id = "inflasi";
  p.text_id = "tx-9";
  try {
    build_manifest(std::vector<PairExample>{p});
    FAIL();
  } catch (const AccountingError& e) {
    EXPECT_NE(std::string(e.what()).find("tx-9"), std::string::npos);
  }
}

TEST(Manifest, JsonRoundTrip) {
  DatasetManifest m;
  m.stages[0] = {10, 4, 6, 2};
  m.stages[2] = {3, 3, 0, 1};
  m.totals = {13, 7, 6, 2};
  const auto back = manifest_from_json(to_json(m));
  EXPECT_EQ(back, m);
}

std::vector<PairExample> labeled_pairs(std::size_t relevant,
                                       std::size_t not_relevant) {
  std::vector<PairExample> out;
  for (std::size_t i = 0; i < relevant + not_relevant; ++i) {
    out.push_back(pair("c" + std::to_string(i % 7), "t" + std::to_string(i),
                       i < relevant ? Label::relevant : Label::not_relevant,
                       Stage::one));
  }
  return out;
}

std::size_t count_label(const std::vector<PairExample>& v, Label l) {
  return static_cast<std::size_t>(std::count_if(
      v.begin(), v.end(), [&](const PairExample& p) { return *p.label == l; }));
}

TEST(Split, HundredPairsAtTwentyPercent) {
  const auto r = stratified_split(labeled_pairs(30, 70), 0.2, 1);
  EXPECT_EQ(r.validation.size(), 20u);
  EXPECT_EQ(count_label(r.validation, Label::relevant), 6u);
  EXPECT_EQ(count_label(r.validation, Label::not_relevant), 14u);
  EXPECT_EQ(r.train.size(), 80u);
}

TEST(Split, FullDatasetSize) {
  const auto r = stratified_split(labeled_pairs(10700, 20660), 0.15, 42);
  EXPECT_EQ(r.validation.size(), 4704u);
  EXPECT_EQ(count_label(r.validation, Label::relevant), 1605u);
  EXPECT_EQ(count_label(r.validation, Label::not_relevant), 3099u);
}

TEST(Split, FractionZeroAndBounds) {
  const auto pairs = labeled_pairs(3, 5);
  const auto r = stratified_split(pairs, 0.0, 3);
  EXPECT_TRUE(r.validation.empty());
  EXPECT_EQ(r.train.size(), pairs.size());
  EXPECT_THROW(stratified_split(pairs, -0.1, 3), ConfigError);
  EXPECT_THROW(stratified_split(pairs, 1.5, 3), ConfigError);
}

TEST(Split, PropertiesOverRandomInputs) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = rng.below(60), n = rng.below(60) + (r == 0);
    const double f = static_cast<double>(rng.below(101)) / 100.0;
    const auto pairs = labeled_pairs(r, n);
    const auto res = stratified_split(pairs, f, rng.next());
    // Partition: sizes add up and no pair appears twice.
    EXPECT_EQ(res.train.size() + res.validation.size(), pairs.size());
    std::set<std::string> ids;
    for (const auto* part : {&res.train, &res.validation}) {
      for (const auto& p : *part) EXPECT_TRUE(ids.insert(p.text_id).second);
    }
    // Total validation size is round(f * N); each label within one pair of
    // its exact share.
    EXPECT_NEAR(static_cast<double>(res.validation.size()),
                f * static_cast<double>(pairs.size()), 0.5 + 1e-9);
    EXPECT_NEAR(static_cast<double>(count_label(res.validation, Label::relevant)),
                f * static_cast<double>(r), 1.0);
    for (const auto& p : res.validation) EXPECT_EQ(p.split, Split::validation);
    for (const auto& p : res.train) EXPECT_EQ(p.split, Split::train);
  }
}

TEST(Split, DeterministicPerSeed) {
  const auto pairs = labeled_pairs(40, 60);
  const auto a = stratified_split(pairs, 0.3, 5);
  const auto b = stratified_split(pairs, 0.3, 5);
  const auto c = stratified_split(pairs, 0.3, 6);
  auto ids = [](const std::vector<PairExample>& v) {
    std::vector<std::string> out;
    for (const auto& p : v) out.push_back(p.text_id);
    return out;
  };
  EXPECT_EQ(ids(a.validation), ids(b.validation));
  EXPECT_NE(ids(a.validation), ids(c.validation));
}

TEST(Split, UnlabeledPairRejected) {
  auto pairs = labeled_pairs(2, 2);
  pairs[1].label.reset();
  EXPECT_THROW(stratified_split(pairs, 0.5, 0), InputError);
}

}  // namespace
}  // namespace relevancy

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>

#include "relevancy/errors.hpp"
#include "relevancy/labeling.hpp"

namespace relevancy {
namespace {

namespace fs = std::filesystem;

LabelRequest request(std::string ctx, std::string text, Stage stage = Stage::one) {
  return LabelRequest{std::move(ctx), std::move(text), stage,
                      TemplateRegistry{}.for_stage(stage).id};
}

// Relevant iff the text mentions the context word.
MockLabelProvider::Oracle contains_oracle() {
  return [](const LabelRequest& r) {
    return r.text.find(r.context_description) != std::string::npos
               ? Label::relevant
               : Label::not_relevant;
  };
}

RetryPolicy no_sleep(std::size_t attempts = 3) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.sleep = [](std::chrono::milliseconds) {};
  return p;
}

class FailingProvider : public LabelProvider {
 public:
  std::string id() const override { return "failing"; }
  std::string complete(const ProviderCall&) override {
    ++calls;
    throw ProviderError("upstream 503");
  }
  std::atomic<int> calls{0};
};

class FlakyProvider : public LabelProvider {
 public:
  explicit FlakyProvider(int failures) : failures_(failures) {}
  std::string id() const override { return "flaky"; }
  std::string complete(const ProviderCall&) override {
    if (calls++ < failures_) throw ProviderError("timeout");
    return std::string(kVerdictRelevant);
  }
  int calls = 0;

 private:
  int failures_;
};

class ScriptedProvider : public LabelProvider {
 public:
  explicit ScriptedProvider(std::string reply) : reply_(std::move(reply)) {}
  std::string id() const override { return "scripted"; }
  std::string complete(const ProviderCall&) override {
    ++calls;
    return reply_;
  }
  int calls = 0;

 private:
  std::string reply_;
};

TEST(Template, RenderSubstitutes) {
  const PromptTemplate t{"toy", Stage::one, "Topic: {context}\nText: {text}\nRelevant?"};
  EXPECT_EQ(render_prompt(t, request("Fuel prices", "bensin naik")),
            "Topic: Fuel prices\nText: bensin naik\nRelevant?");
}

TEST(Template, PlaceholdersInValuesAreNotExpanded) {
  const PromptTemplate t{"toy", Stage::one, "[{context}] [{text}]"};
  EXPECT_EQ(render_prompt(t, request("a {text} b", "c")), "[a {text} b] [c]");
}

TEST(Template, MissingPlaceholderAndClause) {
  EXPECT_THROW(validate_template({"x", Stage::one, "Topic: {context}"}), TemplateError);
  EXPECT_THROW(validate_template({"x", Stage::one, "Text: {text}"}), TemplateError);
  EXPECT_THROW(validate_template({"x", Stage::two, "{context} {text}"}), TemplateError);
  EXPECT_NO_THROW(validate_template({"x", Stage::one, "{context} {text}"}));
}

TEST(Template, ShippedTemplatesCarryNeutralityClause) {
  const TemplateRegistry reg;
  for (Stage s : {Stage::two, Stage::three}) {
    const auto prompt = render_prompt(reg.for_stage(s), request("Fuel prices", "gila bensin"));
    EXPECT_NE(prompt.find(kRegisterNeutralityClause), std::string::npos);
  }
  EXPECT_EQ(reg.for_stage(Stage::one).id, "formal-v1");
  EXPECT_THROW(reg.at("nope"), TemplateError);
}

TEST(Verdict, StrictParsing) {
  EXPECT_EQ(parse_verdict("RELEVANT"), Label::relevant);
  EXPECT_EQ(parse_verdict("  NOT_RELEVANT\n"), Label::not_relevant);
  EXPECT_THROW(parse_verdict("relevant"), ProtocolError);
  EXPECT_THROW(parse_verdict("RELEVANT because"), ProtocolError);
  EXPECT_THROW(parse_verdict(""), ProtocolError);
}

TEST(LabelPair, MockMatchesGroundTruth) {
  MockLabelProvider mock(contains_oracle());
  LabelCache cache;
  const TemplateRegistry templates;
  const auto r = label_pair(mock, templates, request("bensin", "harga bensin naik"), cache);
  EXPECT_EQ(r.label, Label::relevant);
  EXPECT_EQ(r.attempts, 1u);
  EXPECT_FALSE(r.cached);
  EXPECT_EQ(r.provider_id, "mock");
}

TEST(LabelPair, SecondCallIsCached) {
  MockLabelProvider mock(contains_oracle());
  LabelCache cache;
  const TemplateRegistry templates;
  label_pair(mock, templates, request("bensin", "harga bensin naik"), cache);
  // Cache keys normalize both strings.
  const auto r = label_pair(mock, templates, request("Bensin", "harga  BENSIN naik"), cache);
  EXPECT_TRUE(r.cached);
  EXPECT_EQ(r.attempts, 0u);
  EXPECT_EQ(mock.calls(), 1u);
}

TEST(LabelPair, RetriesThenFails) {
  FailingProvider failing;
  LabelCache cache;
  std::vector<std::chrono::milliseconds> waits;
  auto policy = no_sleep(3);
  policy.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d); };
  try {
    label_pair(failing, TemplateRegistry{}, request("a", "b"), cache, policy);
    FAIL();
  } catch (const LabelingError& e) {
    EXPECT_NE(std::string(e.what()).find("upstream 503"), std::string::npos);
  }
  EXPECT_EQ(failing.calls, 3);
  ASSERT_EQ(waits.size(), 2u);
  EXPECT_GE(waits[0].count(), 800);
  EXPECT_LE(waits[0].count(), 1200);
  EXPECT_GE(waits[1].count(), 1600);
  EXPECT_LE(waits[1].count(), 2400);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(LabelPair, RecoversFromTransientFailure) {
  FlakyProvider flaky(2);
  LabelCache cache;
  const auto r = label_pair(flaky, TemplateRegistry{}, request("a", "b"), cache, no_sleep(3));
  EXPECT_EQ(r.attempts, 3u);
  EXPECT_EQ(r.label, Label::relevant);
}

TEST(LabelPair, MalformedResponseIsNotRetried) {
  ScriptedProvider bad("maybe");
  LabelCache cache;
  EXPECT_THROW(label_pair(bad, TemplateRegistry{}, request("a", "b"), cache, no_sleep(5)),
               ProtocolError);
  EXPECT_EQ(bad.calls, 1);
}

TEST(RetryPolicy, DelayIsDeterministicAndBounded) {
  RetryPolicy p;
  for (std::uint64_t salt = 0; salt < 100; ++salt) {
    for (std::size_t retry = 1; retry <= 4; ++retry) {
      const double base = 1000.0 * std::pow(2.0, static_cast<double>(retry - 1));
      const auto d = p.delay(retry, salt).count();
      EXPECT_GE(d, base * 0.8 - 1);
      EXPECT_LE(d, base * 1.2 + 1);
      EXPECT_EQ(d, p.delay(retry, salt).count());
    }
  }
}

TEST(Cache, PersistsAcrossInstances) {
  const auto path = fs::temp_directory_path() / "relevancy_cache_test.jsonl";
  fs::remove(path);
  {
    LabelCache cache(path);
    cache.put("k1", {Label::relevant, "mock", "2026-01-01T00:00:00Z"});
    cache.put("k2", {Label::not_relevant, "mock", "2026-01-01T00:00:00Z"});
  }
  LabelCache reloaded(path);
  EXPECT_EQ(reloaded.size(), 2u);
  ASSERT_TRUE(reloaded.get("k1"));
  EXPECT_EQ(reloaded.get("k1")->label, Label::relevant);
  EXPECT_FALSE(reloaded.get("k3"));
  fs::remove(path);
}

TEST(Batch, HundredRequestsFortyCached) {
  MockLabelProvider mock(contains_oracle());
  LabelCache cache;
  const TemplateRegistry templates;
  std::vector<LabelRequest> requests;
  for (int i = 0; i < 100; ++i) {
    requests.push_back(request("w" + std::to_string(i % 7),
                               "teks nomor " + std::to_string(i) + " w3"));
  }
  for (int i = 0; i < 40; ++i) {
    cache.put(LabelCache::key(requests[i]), {Label::not_relevant, "seed", ""});
  }
  const auto results = label_batch(mock, templates, requests, cache, 8, no_sleep());
  EXPECT_EQ(mock.calls(), 60u);
  ASSERT_EQ(results.size(), 100u);
  for (int i = 0; i < 100; ++i) {
    ASSERT_TRUE(results[i].ok());
    EXPECT_EQ(results[i].result->cached, i < 40);
    if (i >= 40) {
      EXPECT_EQ(results[i].result->label, contains_oracle()(requests[i]));
    }
  }
}

TEST(Batch, EmptyAndSerialOrder) {
  MockLabelProvider mock(contains_oracle());
  LabelCache cache;
  EXPECT_TRUE(label_batch(mock, TemplateRegistry{}, {}, cache, 4).empty());
  std::vector<LabelRequest> requests;
  for (int i = 0; i < 20; ++i) {
    requests.push_back(request("ctx", "text " + std::to_string(i)));
  }
  label_batch(mock, TemplateRegistry{}, requests, cache, 1, no_sleep());
  const auto log = mock.call_log();
  ASSERT_EQ(log.size(), 20u);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(log[i], "text " + std::to_string(i));
  }
}

TEST(Batch, FailuresReportedPerItem) {
  FailingProvider failing;
  LabelCache cache;
  std::vector<LabelRequest> requests = {request("a", "b"), request("c", "d")};
  const auto results = label_batch(failing, TemplateRegistry{}, requests, cache, 2, no_sleep(2));
  ASSERT_EQ(results.size(), 2u);
  for (const auto& r : results) {
    EXPECT_FALSE(r.ok());
    EXPECT_FALSE(r.error.empty());
  }
  EXPECT_THROW(label_batch(failing, TemplateRegistry{}, requests, cache, 0), ConfigError);
}

}  // namespace
}  // namespace relevancy

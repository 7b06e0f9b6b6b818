#include <gtest/gtest.h>

#include "factcheck/checker.hpp"
#include "factcheck/errors.hpp"
#include "support.hpp"

using namespace factcheck;
using namespace factcheck::checker;

namespace {

std::string words(std::size_t n, const std::string& w = "tok") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
  return s;
}

class FixedTransport : public llm::HttpTransport {
 public:
  explicit FixedTransport(llm::HttpResponse r) : r_(std::move(r)) {}
  llm::HttpResponse post(const std::string& path, const std::multimap<std::string, std::string>&,
                         const std::string& body, const std::string&) override {
    last_path = path;
    last_body = body;
    return r_;
  }
  std::string last_path, last_body;

 private:
  llm::HttpResponse r_;
};

}  // namespace

TEST(Chunking, WhitespaceGreedy) {
  auto c = chunk(words(1200), ChunkPlan::parse("whitespace:500"));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(text::word_count(c[0]), 500u);
  EXPECT_EQ(text::word_count(c[1]), 500u);
  EXPECT_EQ(text::word_count(c[2]), 200u);
  EXPECT_TRUE(chunk("", ChunkPlan{}).empty());
}

TEST(Chunking, SentenceModeNeverSplitsSentences) {
  std::string doc = "Alpha " + words(199, "alpha") + ". Beta " + words(199, "beta") + ". Gamma " + words(199, "gamma") + ".";
  auto c = chunk(doc, ChunkPlan::parse("sentence:350"));
  ASSERT_EQ(c.size(), 3u);
  for (const auto& x : c) EXPECT_EQ(text::word_count(x), 200u);

  auto big = chunk(words(600) + ".", ChunkPlan::parse("sentence:500"));
  ASSERT_EQ(big.size(), 1u);
  EXPECT_EQ(text::word_count(big[0]), 600u);

  auto packed = chunk("One two. Three four. Five six.", ChunkPlan::parse("sentence:4"));
  EXPECT_EQ(packed, (std::vector<std::string>{"One two. Three four.", "Five six."}));
}

TEST(Chunking, PlanParsing) {
  EXPECT_EQ(ChunkPlan::parse("sentence:350").to_string(), "sentence:350");
  EXPECT_THROW(ChunkPlan::parse("words:5"), UsageError);
  EXPECT_THROW(ChunkPlan::parse("whitespace:0"), UsageError);
  EXPECT_THROW(ChunkPlan::parse("whitespace"), UsageError);
  EXPECT_EQ(default_plan_for("stub").size, 500u);
  EXPECT_EQ(default_plan_for("remote:http://localhost:8000/alignscore").size, 350u);
}

TEST(ScoreClaim, MaxOverChunksAndDocuments) {
  fixtures::ScriptedChecker m;
  ChunkPlan plan = ChunkPlan::parse("sentence:1");
  m.set("First.", "c", 0.2);
  m.set("Second.", "c", 0.9);
  m.set("Third.", "c", 0.4);
  std::vector<EvidenceDoc> one{{"d", "First. Second. Third."}};
  EXPECT_DOUBLE_EQ(score_claim(m, one, "c", plan).score, 0.9);
  m.set("Low.", "c", 0.3);
  m.set("High.", "c", 0.7);
  std::vector<EvidenceDoc> two{{"d1", "Low."}, {"d2", "High."}};
  EXPECT_DOUBLE_EQ(score_claim(m, two, "c", plan).score, 0.7);
  EXPECT_THROW(score_claim(m, std::vector<EvidenceDoc>{}, "c", plan), UsageError);
}

TEST(ScoreClaim, RangeMismatchIsBackendError) {
  class Drifting : public Checker {
   public:
    CheckerOutput score(std::string_view chunk, std::string_view) override {
      return {0.0, chunk == "First." ? ScoreRange{0, 1} : ScoreRange{-1, 1}};
    }
    std::string identity() const override { return "drift"; }
  } m;
  std::vector<EvidenceDoc> docs{{"d", "First. Second."}};
  EXPECT_THROW(score_claim(m, docs, "c", ChunkPlan::parse("sentence:1")), BackendError);
}

TEST(Decide, StrictThresholds) {
  EXPECT_EQ(decide({0.6, {0, 1}}, ThresholdPolicy::fixed(0.5)), SupportLabel::supported);
  EXPECT_EQ(decide({0.5, {0, 1}}, ThresholdPolicy::fixed(0.5)), SupportLabel::unsupported);
  EXPECT_DOUBLE_EQ(ThresholdPolicy::midpoint().resolve({-1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(ThresholdPolicy::midpoint().resolve({0, 1}), 0.5);
  EXPECT_EQ(decide({0.0, {-1, 1}}, ThresholdPolicy::midpoint()), SupportLabel::unsupported);
  EXPECT_THROW(ThresholdPolicy::tuned(std::nullopt).resolve({0, 1}), UsageError);
  EXPECT_DOUBLE_EQ(ThresholdPolicy::tuned(0.7).resolve({0, 1}), 0.7);
  EXPECT_EQ(ThresholdPolicy::fixed(0.5).to_string(), "fixed:0.5");
  EXPECT_EQ(ThresholdPolicy::midpoint().to_string(), "midpoint");
}

TEST(Decomposed, AllFactsMustHold) {
  fixtures::ScriptedChecker m;
  std::vector<EvidenceDoc> ev{{"d", "E."}};
  m.set("E.", "f1", 0.9);
  m.set("E.", "f2", 0.1);
  m.set("E.", "f3", 0.8);
  auto plan = ChunkPlan::parse("sentence:100");
  auto pol = ThresholdPolicy::fixed(0.5);
  std::vector<decomp::AtomicFact> all_true{{"f1", 0}, {"f3", 1}};
  EXPECT_EQ(decide_facts(m, ev, all_true, plan, pol).label, SupportLabel::supported);
  std::vector<decomp::AtomicFact> mixed{{"f1", 0}, {"f2", 1}, {"f3", 2}};
  auto d = decide_facts(m, ev, mixed, plan, pol);
  EXPECT_EQ(d.label, SupportLabel::unsupported);
  EXPECT_EQ(d.fact_labels, (std::vector<SupportLabel>{SupportLabel::supported, SupportLabel::unsupported,
                                                       SupportLabel::supported}));

  fixtures::Scripted s;
  s.decompose("f2", {"f2"});
  m.set("E.", "f2", 0.6);
  EXPECT_EQ(check_decomposed(m, s.gateway, ev, "f2", plan, pol), decide(score_claim(m, ev, "f2", plan), pol));
}

TEST(LexicalStubScores, Examples) {
  EXPECT_DOUBLE_EQ(lexical_stub("The cat sat on the mat. It purred.", "The cat sat on the mat.").score, 1.0);
  EXPECT_DOUBLE_EQ(lexical_stub("Dogs bark loudly.", "The cat sat.").score, 0.0);
  EXPECT_DOUBLE_EQ(lexical_stub("alpha gamma", "alpha beta gamma delta").score, 0.5);
  EXPECT_DOUBLE_EQ(lexical_stub("it is", "It is.").score, 1.0);
  EXPECT_THROW(lexical_stub("x", "  ...  "), DataError);
  EXPECT_EQ(lexical_stub("a", "b").range, (ScoreRange{0, 1}));
}

TEST(Batch, ParsesIndexedVerdicts) {
  auto l = parse_batch_response(R"({"[1]": "yes", "[2]": "no", "[3]": "yes"})", 3);
  EXPECT_EQ(l, (std::vector<SupportLabel>{SupportLabel::supported, SupportLabel::unsupported,
                                          SupportLabel::supported}));
  EXPECT_THROW(parse_batch_response(R"({"[1]": "yes", "[3]": "yes"})", 3), DataError);
  auto all = parse_batch_response("```json\n{\"[1]\": \"Yes\", \"[2]\": \"yes\"}\n```", 2);
  EXPECT_EQ(all, (std::vector<SupportLabel>(2, SupportLabel::supported)));

  fixtures::Scripted s;
  s.say(llm::templates::multi_claim_eval, {{"DOCUMENT", "doc"}, {"CLAIMS", "[1] a\n[2] b"}},
        R"({"[1]": "no", "[2]": "yes"})");
  std::vector<std::string> claims{"a", "b"};
  EXPECT_EQ(check_batch_llm(s.gateway, "doc", claims),
            (std::vector<SupportLabel>{SupportLabel::unsupported, SupportLabel::supported}));
}

TEST(Remote, WireFormatAndValidation) {
  auto t = std::make_unique<FixedTransport>(llm::HttpResponse{200, R"({"score": 0.25, "v_min": -1, "v_max": 1})"});
  auto* tp = t.get();
  RemoteChecker r("http://localhost:9000/score", std::move(t));
  auto out = r.score("chunk", "claim");
  EXPECT_DOUBLE_EQ(out.score, 0.25);
  EXPECT_EQ(out.range, (ScoreRange{-1, 1}));
  EXPECT_EQ(tp->last_path, "/score");
  EXPECT_EQ(nlohmann::json::parse(tp->last_body), (nlohmann::json{{"doc", "chunk"}, {"claim", "claim"}}));
  EXPECT_THROW(RemoteChecker::parse_response(R"({"score": 2, "v_min": 0, "v_max": 1})"), BackendError);
  EXPECT_THROW(RemoteChecker::parse_response(R"({"score": 0, "v_min": 1, "v_max": 0})"), BackendError);
  EXPECT_THROW(RemoteChecker::parse_response("nope"), BackendError);
}

TEST(LlmCheckerScores, YesIsOne) {
  fixtures::Scripted s;
  s.say(llm::templates::zero_shot_eval, {{"DOCUMENT", "d"}, {"CLAIM", "c"}}, "Yes");
  LlmChecker c(s.gateway, "gpt-4-0125-preview");
  EXPECT_DOUBLE_EQ(c.score("d", "c").score, 1.0);
  auto made = make_checker("llm:gpt-4-0125-preview", &s.gateway);
  EXPECT_EQ(made->identity(), "llm:gpt-4-0125-preview");
  EXPECT_THROW(make_checker("llm:x", nullptr), UsageError);
  EXPECT_THROW(make_checker("bogus", nullptr), UsageError);
  EXPECT_EQ(make_checker("stub", nullptr)->identity(), "stub");
}

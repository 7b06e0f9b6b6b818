#include <gtest/gtest.h>

#include <functional>

#include "factcheck/annotate.hpp"
#include "factcheck/errors.hpp"
#include "roundtrip.hpp"

using namespace factcheck;
using namespace factcheck::annotate;

namespace {

constexpr auto S = SupportLabel::supported;
constexpr auto U = SupportLabel::unsupported;

std::vector<AnnotationTask> tasks(int n) {
  std::vector<AnnotationTask> out;
  for (int k = 0; k < n; ++k) {
    AnnotationTask t;
    t.id = "t" + std::to_string(k);
    t.document = "doc";
    t.claim = "claim";
    t.gold = k % 2 ? S : U;
    t.pipeline = k < 2 ? "C2D" : "D2C";
    out.push_back(t);
  }
  return out;
}

int status_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const AnnotateError& e) {
    return e.status();
  }
  return 200;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST(AnnotationStore, UnanimousResolvesWithoutAdjudication) {
  AnnotationStore st(tasks(1), {"a", "b", "c"});
  for (auto who : {"a", "b", "c"}) st.submit_verdict("t0", who, S);
  auto t = st.tasks()[0];
  EXPECT_EQ(t.status, TaskStatus::resolved);
  EXPECT_EQ(t.history, (std::vector<TaskStatus>{TaskStatus::open, TaskStatus::complete, TaskStatus::resolved}));
  EXPECT_EQ(t.resolved_label(), std::optional<SupportLabel>(S));
  EXPECT_EQ(status_of([&] { st.adjudicate("t0", U); }), 409);
  EXPECT_EQ(status_of([&] { st.submit_verdict("t0", "a", U); }), 409);
}

TEST(AnnotationStore, DisagreementNeedsAdjudication) {
  AnnotationStore st(tasks(1), {"a", "b", "c"});
  st.submit_verdict("t0", "a", S);
  EXPECT_EQ(status_of([&] { st.adjudicate("t0", S); }), 409);
  st.submit_verdict("t0", "b", S);
  st.submit_verdict("t0", "c", U);
  EXPECT_EQ(st.tasks()[0].status, TaskStatus::adjudicating);
  EXPECT_EQ(status_of([&] { st.agreement_report(); }), 409);
  st.adjudicate("t0", S);
  EXPECT_EQ(st.tasks()[0].status, TaskStatus::resolved);
  EXPECT_EQ(status_of([&] { st.submit_verdict("t0", "a", S); }), 409);
  EXPECT_EQ(status_of([&] { st.submit_verdict("t0", "zed", S); }), 403);
  EXPECT_EQ(status_of([&] { st.submit_verdict("t9", "a", S); }), 404);
}

TEST(AnnotationStore, ReportGateListsOpenTasks) {
  AnnotationStore st(tasks(3), {"a", "b"});
  st.submit_verdict("t0", "a", S);
  st.submit_verdict("t0", "b", S);
  try {
    st.agreement_report();
    FAIL();
  } catch (const AnnotateError& e) {
    EXPECT_EQ(e.status(), 409);
    std::string msg = e.what();
    EXPECT_NE(msg.find("t1"), std::string::npos);
    EXPECT_NE(msg.find("t2"), std::string::npos);
    EXPECT_EQ(msg.find("t0"), std::string::npos);
  }
}

TEST(AnnotationStore, UnanimousReport) {
  AnnotationStore st(tasks(4), {"a", "b", "c"});
  // Everyone says supported: synthetic-label accuracy is the fraction of gold-supported tasks,
  // while each annotator matches the resolved verdict everywhere.
  for (int k = 0; k < 4; ++k)
    for (auto who : {"a", "b", "c"}) st.submit_verdict("t" + std::to_string(k), who, S);
  auto r = st.agreement_report();
  EXPECT_DOUBLE_EQ(r.overall.kappa, 1.0);
  EXPECT_DOUBLE_EQ(r.overall.synthetic_label_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.overall.mean_annotator_accuracy, 1.0);
  ASSERT_EQ(r.pipelines.size(), 2u);
  EXPECT_EQ(r.pipelines[0].pipeline, "C2D");
  EXPECT_EQ(r.pipelines[0].items, 2u);
}

TEST(AnnotationStore, KappaMatchesMetricsOracle) {
  AnnotationStore st(tasks(4), {"a", "b", "c"});
  const int m[4][3] = {{1, 1, 1}, {1, 1, 0}, {0, 0, 0}, {1, 0, 0}};
  const char* who[3] = {"a", "b", "c"};
  for (int k = 0; k < 4; ++k)
    for (int a = 0; a < 3; ++a) st.submit_verdict("t" + std::to_string(k), who[a], label_from_bool(m[k][a] == 1));
  st.adjudicate("t1", S);
  st.adjudicate("t3", U);
  EXPECT_NEAR(st.agreement_report().overall.kappa, 1.0 / 3.0, 1e-9);
}

TEST(AnnotationStore, EventLogReplay) {
  TempDir dir("factcheck_annotate_replay");
  auto log = dir.path / "events.jsonl";
  {
    AnnotationStore st(tasks(2), {"a", "b"}, log);
    st.submit_verdict("t0", "a", S, 500);
    st.submit_verdict("t0", "b", U, 700);
    st.adjudicate("t0", U);
    st.submit_verdict("t1", "a", U);
  }
  AnnotationStore again(tasks(2), {"a", "b"}, log);
  auto t = again.tasks();
  EXPECT_EQ(t[0].status, TaskStatus::resolved);
  EXPECT_EQ(t[0].adjudicated, std::optional<SupportLabel>(U));
  EXPECT_EQ(t[0].elapsed_ms.at("b"), 700);
  EXPECT_EQ(t[1].status, TaskStatus::open);
  EXPECT_EQ(t[1].verdicts.at("a"), U);
  EXPECT_EQ(status_of([&] { again.submit_verdict("t1", "a", S); }), 409);
}

TEST(AnnotationStore, AnnotatorViewHasNoLabels) {
  AnnotationStore st(tasks(2), {"a", "b"});
  st.submit_verdict("t1", "a", S);
  auto v = st.annotator_view("a");
  EXPECT_FALSE(fixtures::RoundTrip::leaks(v));
  EXPECT_EQ(v["submitted"], 1);
  EXPECT_EQ(v["tasks"][1]["my_verdict"], "supported");
  EXPECT_TRUE(v["tasks"][0]["my_verdict"].is_null());
}

TEST(ServiceConfigParsing, Validation) {
  EXPECT_THROW(ServiceConfig::from_json({{"annotators", {"a"}}, {"tokens", {{"x", "a"}}}}), UsageError);
  EXPECT_THROW(ServiceConfig::from_json({{"annotators", {"a", "b"}}, {"tokens", {{"x", "c"}}}}), UsageError);
  auto c = ServiceConfig::from_json({{"annotators", {"a", "b"}}, {"tokens", {{"x", "a"}}}});
  EXPECT_EQ(c.annotators.size(), 2u);
}

TEST(AnnotationService, HttpRoundTrip) {
  TempDir dir("factcheck_annotate_http");
  fixtures::RoundTrip rt;
  auto o = rt.run(dir.path);
  for (const auto& p : o.problems) ADD_FAILURE() << p;
  EXPECT_TRUE(o.annotator_payloads_clean);
  EXPECT_TRUE(o.adjudication_seen);
  EXPECT_EQ(o.bad_token_status, 401);
  EXPECT_EQ(o.duplicate_status, 409);
  EXPECT_EQ(o.annotator_report_status, 403);
  EXPECT_EQ(o.report_before_resolution, 409);
  EXPECT_EQ(o.unanimous_adjudication_status, 409);
  EXPECT_EQ(o.after_resolved_status, 409);
  EXPECT_NEAR(o.report_kappa, o.oracle_kappa, 1e-12);
  EXPECT_LT(o.report_kappa, 1.0);
  ASSERT_TRUE(o.report.contains("pipelines"));
  EXPECT_EQ(o.report["pipelines"].size(), 2u);
}

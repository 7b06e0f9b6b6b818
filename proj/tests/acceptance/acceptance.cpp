// Acceptance checks. One PASS/FAIL line per criterion; exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "../roundtrip.hpp"
#include "../support.hpp"
#include "factcheck/bench.hpp"
#include "factcheck/c2d.hpp"
#include "factcheck/checker.hpp"
#include "factcheck/d2c.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/metrics.hpp"
#include "factcheck/records.hpp"

using namespace factcheck;

namespace {

// Tolerances.
constexpr double kBaccTol = 1e-12;
constexpr double kTuneTol = 1e-9;
constexpr double kKappaTol = 1e-9;
constexpr double kC2DSeconds = 5.0;

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void report(const char* name, const std::function<void(Check&)>& body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  if (!c.ok) ++failures;
  std::printf("%s %s%s%s\n", c.ok ? "PASS" : "FAIL", name, c.detail.empty() ? "" : " - ", c.detail.c_str());
  std::fflush(stdout);
}

// Independent count of (document, subset) pairs: one supporting document plus each retained
// omission document, each paired with every non-empty subset of the facts.
std::size_t expected_c2d_tuples(std::size_t facts, std::size_t omission_docs) {
  std::size_t subsets = 0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << facts); ++mask) ++subsets;
  return subsets * (1 + omission_docs);
}

void c2d_count_law(Check& c) {
  fixtures::Scripted s;
  fixtures::TwoFactClaim fx;
  fx.script(s);
  auto start = std::chrono::steady_clock::now();
  auto r = c2d::run_c2d(s.gateway, {fx.id, fx.claim});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(r.skipped.empty(), "claim skipped: " + r.skipped);
  c.require(r.nonsupporting.size() == 4, "expected 4 retained omission documents");
  c.require(r.tuples.size() == expected_c2d_tuples(2, 4) && r.tuples.size() == 15,
            "tuple count " + std::to_string(r.tuples.size()));
  std::set<std::pair<std::string, std::vector<std::size_t>>> seen;
  for (const auto& t : r.tuples) {
    const auto& p = t.provenance;
    bool expected;
    if (p.origin == Origin::supporting_doc) {
      expected = true;
      c.require(t.document.text == fx.supporting, "supporting tuple has the wrong document");
    } else {
      c.require(p.origin == Origin::omission_doc && p.omitted_fact && p.omitted_side, "bad provenance");
      expected = std::find(p.subset.begin(), p.subset.end(), *p.omitted_fact) == p.subset.end();
      c.require(t.document.text == fixtures::TwoFactClaim::omission_doc(*p.omitted_fact, *p.omitted_side),
                "omission tuple has the wrong document");
    }
    c.require(is_supported(t.label) == expected, "label disagrees with provenance for " + p.doc_id);
    std::string want_claim = p.subset.size() == 2 ? fx.merged : fx.facts.at(p.subset.at(0));
    c.require(t.claim == want_claim, "claim text does not match its subset");
    seen.insert({p.doc_id, p.subset});
  }
  c.require(seen.size() == 15, "duplicate (document, subset) pairs");
  c.require(secs < kC2DSeconds, "took " + std::to_string(secs) + " s");
}

void c2d_gate_semantics(Check& c) {
  fixtures::Scripted s;
  const std::string claim = "The festival drew 40,000 visitors.";
  const std::string fact = "The festival drew 40,000 visitors.";
  s.decompose(claim, {fact});
  // Every attempt yields a pair whose first sentence alone already entails the fact.
  s.say_seq(llm::templates::atomic_expansion, {{"CLAIM", fact}},
            {"Sentence 1: 40,000 visitors came to the festival.\nSentence 2: It rained.",
             "Sentence 1: The festival drew 40,000 visitors.\nSentence 2: Tickets sold out.",
             "Sentence 1: Attendance hit 40,000.\nSentence 2: Parking was scarce."});
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"40,000 visitors came to the festival.", "It rained."},
      {"The festival drew 40,000 visitors.", "Tickets sold out."},
      {"Attendance hit 40,000.", "Parking was scarce."}};
  for (const auto& [a, b] : pairs) {
    s.entail(text::ensure_terminal(a) + " " + text::ensure_terminal(b), fact, true);
    s.entail(a, fact, true);
  }
  c2d::RejectionStats stats;
  auto pair = c2d::expand_fact(s.gateway, {fact, 0}, 3, stats);
  c.require(!pair, "pair accepted although one sentence entails the fact");
  c.require(stats.pair_gate.rejections == 3, "rejections = " + std::to_string(stats.pair_gate.rejections));
  c.require(stats.pair_gate.denominator == 3, "attempts = " + std::to_string(stats.pair_gate.denominator));
  c.require(s.mock->hits(llm::templates::atomic_expansion, {{"CLAIM", fact}}) == 3, "expected 3 expansion calls");

  auto r = c2d::run_c2d(s.gateway, {"festival", claim});
  c.require(r.tuples.empty() && !r.skipped.empty(), "datapoint not dropped");
  c.require(r.stats.pair_gate.rejections == 3, "run stats rejections = " + std::to_string(r.stats.pair_gate.rejections));
}

void d2c_audit(Check& c) {
  fixtures::Scripted s;
  fixtures::SixSentenceDoc fx;
  fx.script(s);
  d2c::SourceDoc doc{fx.id, fx.sentences};
  auto r = d2c::run_d2c(s.gateway, doc);
  std::vector<std::string> joined;
  for (const auto& ch : r.chunks) joined.insert(joined.end(), ch.sentences.begin(), ch.sentences.end());
  c.require(joined == fx.sentences, "chunks do not concatenate back to the source");
  c.require(r.claims.size() == 3, "expected a claim per chunk");
  for (const auto& ch : r.chunks) {
    auto it = r.ablations_per_chunk.find(ch.index);
    c.require(it != r.ablations_per_chunk.end() && it->second == ch.sentences.size(),
              "ablation count differs from sentence count for chunk " + std::to_string(ch.index));
  }
  std::map<std::size_t, const d2c::ChunkClaim*> by_chunk;
  for (const auto& cl : r.claims) by_chunk[cl.chunk] = &cl;
  std::size_t audited = 0;
  for (const auto& t : r.tuples) {
    const auto& p = t.provenance;
    if (p.origin == Origin::chunk_summary) continue;
    const auto& matrix = by_chunk.at(*p.chunk)->verdicts;
    std::string key = p.origin == Origin::sentence_ablation ? "ablate:" + std::to_string(*p.removed_sentence)
                                                            : "cross:" + std::to_string(*p.premise_chunk);
    const auto& row = matrix.rows.at(key);
    bool conj = true;
    for (auto k : p.subset) conj = conj && row.at(k);
    c.require(is_supported(t.label) == conj, "label is not the conjunction of verdicts for " + p.doc_id);
    // The matrix itself agrees with the fixture's independent truth.
    std::vector<std::size_t> present;
    if (p.origin == Origin::sentence_ablation)
      present = {2 * *p.chunk + (1 - *p.removed_sentence)};
    else
      present = {2 * *p.premise_chunk, 2 * *p.premise_chunk + 1};
    for (std::size_t k = 0; k < row.size(); ++k)
      c.require(row[k] == fx.holds(present, *p.chunk, k), "verdict matrix disagrees with fixture truth");
    ++audited;
  }
  c.require(audited == 36, "audited " + std::to_string(audited) + " augmented tuples");
}

// Second bootstrap implementation over the same index stream, comparing class-wise hit counts.
double reference_p_value(const std::vector<std::vector<std::size_t>>& stream, const std::vector<int>& a,
                         const std::vector<int>& b, const std::vector<int>& gold) {
  std::size_t ge = 0;
  for (const auto& sample : stream) {
    long long pos = 0, neg = 0, a_pos = 0, a_neg = 0, b_pos = 0, b_neg = 0;
    for (auto i : sample) {
      if (gold[i] == 1) {
        ++pos;
        a_pos += a[i] == 1;
        b_pos += b[i] == 1;
      } else {
        ++neg;
        a_neg += a[i] == 0;
        b_neg += b[i] == 0;
      }
    }
    // b_pos/pos + b_neg/neg >= a_pos/pos + a_neg/neg
    if ((b_pos - a_pos) * neg + (b_neg - a_neg) * pos >= 0) ++ge;
  }
  return static_cast<double>(ge) / static_cast<double>(stream.size());
}

void metrics_exactness(Check& c) {
  double b = metrics::bacc(metrics::ConfusionCounts{3, 1, 2, 2});
  c.require(std::abs(b - 0.625) <= kBaccTol, "bacc(3,1,2,2) = " + std::to_string(b));

  std::mt19937_64 rng(2024);
  std::vector<metrics::ScoredItem> items;
  for (int i = 0; i < 20; ++i)
    items.push_back({static_cast<double>(rng() % 997) / 997.0, label_from_bool(rng() % 2 == 1)});
  items[0].gold = SupportLabel::supported;
  items[1].gold = SupportLabel::unsupported;
  double grid = 0.0;
  for (int k = 0; k < 10000; ++k) grid = std::max(grid, metrics::bacc_at(items, k / 9999.0));
  auto tuned = metrics::tune_threshold(items, {0.0, 1.0});
  c.require(std::abs(tuned.bacc - grid) <= kTuneTol,
            "tuned " + std::to_string(tuned.bacc) + " vs grid " + std::to_string(grid));

  std::vector<int> gold{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  std::vector<int> champ{1, 1, 1, 0, 0, 0, 0, 1, 1, 0};
  std::vector<int> chall{1, 1, 0, 1, 1, 0, 0, 0, 1, 0};
  auto to_labels = [](const std::vector<int>& v) {
    std::vector<SupportLabel> out;
    for (int x : v) out.push_back(label_from_bool(x == 1));
    return out;
  };
  auto g = to_labels(gold);
  auto stream = metrics::bootstrap_indices(g, 1000, 17);
  auto mine = metrics::paired_bootstrap(to_labels(champ), to_labels(chall), g, 1000, 17);
  double ref = reference_p_value(stream, champ, chall, gold);
  c.require(mine.p_value == ref, "bootstrap p " + std::to_string(mine.p_value) + " vs " + std::to_string(ref));

  double k = metrics::fleiss_kappa({{1, 1, 1}, {1, 1, 0}, {0, 0, 0}, {1, 0, 0}});
  // Hand-executed: P-bar = (1 + 1/3 + 1 + 1/3) / 4 = 2/3, Pe = 0.5^2 + 0.5^2 = 0.5.
  c.require(std::abs(k - (2.0 / 3.0 - 0.5) / (1.0 - 0.5)) <= kKappaTol, "kappa " + std::to_string(k));
  c.require(metrics::fleiss_kappa({{1, 1, 1}, {0, 0, 0}, {1, 1, 1}, {0, 0, 0}}) == 1.0, "unanimous kappa != 1");
}

void scoring_equivalence(Check& c) {
  fixtures::ScriptedChecker m({0.0, 1.0});
  std::mt19937_64 rng(5);
  std::vector<EvidenceDoc> docs;
  std::vector<double> all;
  const std::string claim = "the claim";
  for (int d = 0; d < 5; ++d) {
    std::string text;
    for (int k = 0; k < 3; ++k) {
      std::string sentence = "Doc " + std::to_string(d) + " chunk " + std::to_string(k) + ".";
      double score = static_cast<double>(rng() % 1000) / 1000.0;
      m.set(sentence, claim, score);
      all.push_back(score);
      text += (k ? " " : "") + sentence;
    }
    docs.push_back({"d" + std::to_string(d), text});
  }
  auto plan = checker::ChunkPlan::parse("sentence:1");
  auto out = checker::score_claim(m, docs, claim, plan);
  c.require(out.score == *std::max_element(all.begin(), all.end()), "score_claim is not the brute-force max");
  c.require(m.calls == 15, "expected 15 (chunk, claim) scores, got " + std::to_string(m.calls));

  auto pol = checker::ThresholdPolicy::fixed(0.5);
  for (int d = 0; d < 5; ++d) {
    std::vector<EvidenceDoc> one{docs[d]};
    auto before = checker::decide(checker::score_claim(m, one, claim, plan), pol);
    one.push_back(docs[d]);
    auto after = checker::decide(checker::score_claim(m, one, claim, plan), pol);
    c.require(before == after, "duplicate document changed a decision");
  }
  auto with_dup = docs;
  with_dup.push_back(docs[2]);
  c.require(checker::score_claim(m, with_dup, claim, plan).score == out.score, "duplicate document changed the max");
  c.require(checker::decide({0.5, {0, 1}}, pol) == SupportLabel::unsupported, "score == t decided supported");
  c.require(checker::decide({0.5000001, {0, 1}}, pol) == SupportLabel::supported, "score > t decided unsupported");
}

void threshold_policies(Check& c) {
  auto mid = checker::ThresholdPolicy::midpoint();
  c.require(mid.resolve({-1.0, 1.0}) == 0.0, "midpoint of (-1, 1) is not 0");
  c.require(mid.resolve({0.0, 1.0}) == 0.5, "midpoint of (0, 1) is not 0.5");
  auto records = read_bench_file(FACTCHECK_TEST_DATA "/bench50.jsonl");
  checker::LexicalStub stub;
  auto f = bench::run_tune(stub, records, {checker::ChunkPlan{}, 2});
  for (const auto& [ds, t] : f.thresholds)
    c.require(t.bacc >= f.midpoint_bacc.at(ds), ds + ": tuned below midpoint on validation");
  // Random scores over a signed range as well.
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<metrics::ScoredItem> items;
    for (int i = 0; i < 15; ++i)
      items.push_back({static_cast<double>(rng() % 2001) / 1000.0 - 1.0, label_from_bool(rng() % 2 == 0)});
    items[0].gold = SupportLabel::supported;
    items[1].gold = SupportLabel::unsupported;
    auto t = metrics::tune_threshold(items, {-1.0, 1.0});
    c.require(t.bacc >= metrics::bacc_at(items, 0.0), "tuned below midpoint on random scores");
  }
}

void eval_determinism(Check& c) {
  auto records = read_bench_file(FACTCHECK_TEST_DATA "/bench50.jsonl");
  c.require(records.size() == 50, "fixture has " + std::to_string(records.size()) + " records");
  checker::LexicalStub stub;
  bench::EvalOptions o;
  o.plan = checker::ChunkPlan::parse("whitespace:500");
  std::vector<std::string> runs;
  for (std::size_t workers : {1, 1, 8, 8}) {
    o.workers = workers;
    runs.push_back(bench::run_eval(stub, nullptr, records, o).to_json().dump(2));
  }
  c.require(runs[0] == runs[1], "two runs differ");
  c.require(runs[0] == runs[2] && runs[2] == runs[3], "workers 1 and 8 differ");
}

void decomposition_wrapper(Check& c) {
  fixtures::ScriptedChecker m({0.0, 1.0});
  fixtures::Scripted s;
  std::vector<EvidenceDoc> ev{{"e", "Evidence."}};
  auto plan = checker::ChunkPlan::parse("sentence:100");
  auto pol = checker::ThresholdPolicy::fixed(0.5);
  struct Case {
    std::string claim;
    std::vector<std::pair<std::string, double>> facts;
  };
  std::vector<Case> cases{{"c-all", {{"a1", 0.9}, {"a2", 0.8}, {"a3", 0.7}}},
                          {"c-one-bad", {{"b1", 0.9}, {"b2", 0.2}, {"b3", 0.7}}},
                          {"c-boundary", {{"d1", 0.9}, {"d2", 0.5}}},
                          {"c-none", {{"e1", 0.1}, {"e2", 0.3}}}};
  for (const auto& k : cases) {
    std::vector<std::string> texts;
    bool all = true;
    for (const auto& [f, score] : k.facts) {
      texts.push_back(f);
      m.set("Evidence.", f, score);
      all = all && score > 0.5;
    }
    s.decompose(k.claim, texts);
    auto got = checker::check_decomposed(m, s.gateway, ev, k.claim, plan, pol);
    c.require(is_supported(got) == all, k.claim + ": decomposed decision is not the conjunction");
  }
  for (double score : {0.2, 0.5, 0.51, 0.9}) {
    const std::string claim = "single " + std::to_string(score);
    m.set("Evidence.", claim, score);
    s.decompose(claim, {claim});
    auto plain = checker::decide(checker::score_claim(m, ev, claim, plan), pol);
    c.require(checker::check_decomposed(m, s.gateway, ev, claim, plan, pol) == plain,
              "single-fact claim differs from plain decide");
  }
}

void annotation_round_trip(Check& c) {
  auto dir = std::filesystem::temp_directory_path() / "factcheck_acceptance_annotate";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  fixtures::RoundTrip rt;
  auto o = rt.run(dir);
  std::filesystem::remove_all(dir);
  for (const auto& p : o.problems) c.require(false, p);
  c.require(o.annotator_payloads_clean, "an annotator-facing payload carried a label or pipeline");
  c.require(o.adjudication_seen, "disagreement did not reach adjudication");
  c.require(o.report_before_resolution == 409, "report was not gated on resolution");
  c.require(std::abs(o.report_kappa - o.oracle_kappa) <= kKappaTol,
            "report kappa " + std::to_string(o.report_kappa) + " vs " + std::to_string(o.oracle_kappa));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  report("c2d-count-law", c2d_count_law);
  report("c2d-gate-semantics", c2d_gate_semantics);
  report("d2c-audit", d2c_audit);
  report("metrics-exactness", metrics_exactness);
  report("scoring-equivalence", scoring_equivalence);
  report("threshold-policies", threshold_policies);
  report("eval-determinism", eval_determinism);
  report("decomposition-wrapper", decomposition_wrapper);
  report("annotation-round-trip", annotation_round_trip);
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "factcheck/checker.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/text.hpp"

namespace factcheck::fixtures {

/// A mock backend plus a gateway over it, with helpers for the scripts tests need most.
struct Scripted {
  std::shared_ptr<llm::MockBackend> mock = std::make_shared<llm::MockBackend>();
  llm::Gateway gateway{mock, no_wait_config()};

  static llm::GatewayConfig no_wait_config() {
    llm::GatewayConfig c;
    c.retry.base_delay = std::chrono::milliseconds(0);
    return c;
  }

  void say(std::string_view tpl, const llm::Bindings& b, std::string response) {
    mock->script(tpl, b, {std::move(response)});
  }
  void say_seq(std::string_view tpl, const llm::Bindings& b, std::vector<std::string> responses) {
    mock->script(tpl, b, std::move(responses));
  }
  void entail(const std::string& source, const std::string& claim, bool yes) {
    say(llm::templates::entailment_check, {{"SOURCE", source}, {"CLAIM", claim}}, yes ? "yes" : "no");
  }
  void decompose(const std::string& claim, const std::vector<std::string>& facts) {
    std::string out;
    for (const auto& f : facts) out += "- " + f + "\n";
    say(llm::templates::sentence_decomposition, {{"SENTENCE", claim}}, out);
  }
  void expansion(const std::string& fact, const std::string& s1, const std::string& s2) {
    say(llm::templates::atomic_expansion, {{"CLAIM", fact}}, "Sentence 1: " + s1 + "\nSentence 2: " + s2);
  }
  void passage(const std::vector<std::string>& facts, std::string doc) {
    say(llm::templates::passage_gen, {{"FACTS", llm::bullet_list(facts)}}, std::move(doc));
  }
  void merge(const std::vector<std::string>& facts, std::string sentence) {
    say(llm::templates::merge_facts, {{"FACTS", llm::bullet_list(facts)}}, std::move(sentence));
  }
  /// Scripts a pair that passes the iff gate.
  void good_pair(const std::string& fact, const std::string& s1, const std::string& s2) {
    expansion(fact, s1, s2);
    entail(text::ensure_terminal(s1) + " " + text::ensure_terminal(s2), fact, true);
    entail(s1, fact, false);
    entail(s2, fact, false);
  }
};

/// Two-fact claim where every gate passes and all four omission documents are retained.
struct TwoFactClaim {
  std::string id = "tijuana";
  std::string claim =
      "Over 5,000 members of the caravan were staying at the Tijuana Stadium, which has a capacity of 3,000.";
  std::vector<std::string> facts{"Over 5,000 members of the caravan were staying at the Tijuana Stadium.",
                                 "The Tijuana Stadium has a capacity of 3,000."};
  std::vector<std::pair<std::string, std::string>> pairs{
      {"Buses brought 3,200 caravan members to the Tijuana Stadium", "A further 1,900 members arrived on foot"},
      {"The Tijuana Stadium was built with 2,000 seats", "A later expansion added 1,000 seats"}};
  std::string merged = "Over 5,000 caravan members stayed at the Tijuana Stadium, whose capacity is 3,000.";
  std::string supporting = "DOC D: all four sentences are stated.";

  static std::string omission_doc(std::size_t i, std::size_t j) {
    return "DOC D'" + std::to_string(i) + "." + std::to_string(j) + ": one sentence left out.";
  }

  const std::string& side(std::size_t i, std::size_t j) const { return j == 0 ? pairs[i].first : pairs[i].second; }

  void script(Scripted& s) const {
    s.decompose(claim, facts);
    for (std::size_t i = 0; i < 2; ++i) s.good_pair(facts[i], pairs[i].first, pairs[i].second);
    std::vector<std::string> all{pairs[0].first, pairs[0].second, pairs[1].first, pairs[1].second};
    s.passage(all, supporting);
    for (const auto& sentence : all) s.entail(supporting, sentence, true);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        s.entail(text::ensure_terminal(side(i, 1 - j)) + " " + text::ensure_terminal(facts[1 - i]), facts[i], false);
        std::vector<std::string> kept;
        for (std::size_t p = 0; p < 2; ++p)
          for (std::size_t q = 0; q < 2; ++q)
            if (!(p == i && q == j)) kept.push_back(side(p, q));
        s.passage(kept, omission_doc(i, j));
      }
    }
    s.merge(facts, merged);
  }
};

/// Six equal-length sentences; chunk c's summary has two facts, fact (c, k) backed by the
/// sentences listed in `backing`.
struct SixSentenceDoc {
  std::string id = "doc6";
  std::vector<std::string> sentences{
      "Theaters expect a weak autumn season.",   "Studios delayed several major titles.",
      "Production gaps will hurt next year.",    "Grosses from rescheduled titles help.",
      "Blue Beetle suffered from the strike.",   "Barbie carried the summer box office."};
  std::vector<std::vector<std::size_t>> backing{{0}, {1}, {2, 0}, {3}, {4}, {5}};

  std::string summary(std::size_t c) const { return "Summary of chunk " + std::to_string(c) + "."; }
  std::string fact(std::size_t c, std::size_t k) const {
    return "Chunk " + std::to_string(c) + " states fact " + std::to_string(k) + ".";
  }
  std::string merged(std::size_t c) const { return "Chunk " + std::to_string(c) + " states both facts."; }

  /// Independent truth: a fact holds for a premise iff one of its backing sentences is present.
  bool holds(const std::vector<std::size_t>& present, std::size_t c, std::size_t k) const {
    for (auto b : backing[2 * c + k])
      if (std::find(present.begin(), present.end(), b) != present.end()) return true;
    return false;
  }

  std::string join_indices(const std::vector<std::size_t>& idx) const {
    std::vector<std::string> parts;
    for (auto i : idx) parts.push_back(sentences[i]);
    return text::join(parts, " ");
  }

  void script(Scripted& s) const {
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<std::size_t> own{2 * c, 2 * c + 1};
      s.say(llm::templates::chunk_summarization, {{"DOCUMENT", join_indices(own)}}, summary(c));
      s.decompose(summary(c), {fact(c, 0), fact(c, 1)});
      s.merge({fact(c, 0), fact(c, 1)}, merged(c));
      std::vector<std::vector<std::size_t>> premises{{2 * c + 1}, {2 * c}};
      for (std::size_t o = 0; o < 3; ++o)
        if (o != c) premises.push_back({2 * o, 2 * o + 1});
      for (const auto& p : premises)
        for (std::size_t k = 0; k < 2; ++k) s.entail(join_indices(p), fact(c, k), holds(p, c, k));
    }
  }
};

/// Checker returning a scripted score per (chunk, claim); unscripted pairs score `fallback`.
class ScriptedChecker : public checker::Checker {
 public:
  explicit ScriptedChecker(checker::ScoreRange range = {}, double fallback = 0.0) : range_(range), fallback_(fallback) {}
  void set(const std::string& chunk, const std::string& claim, double score) { scores_[{chunk, claim}] = score; }
  checker::CheckerOutput score(std::string_view chunk, std::string_view claim) override {
    ++calls;
    auto it = scores_.find({std::string(chunk), std::string(claim)});
    return {it == scores_.end() ? fallback_ : it->second, range_};
  }
  std::string identity() const override { return "scripted"; }
  std::size_t calls = 0;

 private:
  checker::ScoreRange range_;
  double fallback_;
  std::map<std::pair<std::string, std::string>, double> scores_;
};

}  // namespace factcheck::fixtures

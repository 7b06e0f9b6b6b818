#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factcheck/core.hpp"
#include "factcheck/decomp.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/text.hpp"

namespace factcheck::checker {

struct ScoreRange {
  double min = 0.0;
  double max = 1.0;

  double midpoint() const { return (min + max) / 2.0; }
  bool operator==(const ScoreRange&) const = default;
};

struct CheckerOutput {
  double score = 0.0;
  ScoreRange range;
};

enum class ChunkStrategy { whitespace, sentence };

struct ChunkPlan {
  ChunkStrategy strategy = ChunkStrategy::whitespace;
  std::size_t size = 500;

  std::string to_string() const;
  /// "whitespace:500" or "sentence:350".
  static ChunkPlan parse(std::string_view spec);
};

/// Splits a document for scoring. Empty documents give no chunks.
std::vector<std::string> chunk(std::string_view document, const ChunkPlan& plan,
                               const text::SentenceSplitter& splitter = text::default_splitter());

/// The discriminator M(chunk, claim) -> score in a declared range.
class Checker {
 public:
  virtual ~Checker() = default;
  virtual CheckerOutput score(std::string_view chunk, std::string_view claim) = 0;
  virtual std::string identity() const = 0;
};

/// Content-word overlap: |claim words found in chunk| / |claim content words|, range (0, 1).
class LexicalStub : public Checker {
 public:
  CheckerOutput score(std::string_view chunk, std::string_view claim) override;
  std::string identity() const override { return "stub"; }

  static std::vector<std::string> content_words(std::string_view s);
};

CheckerOutput lexical_stub(std::string_view chunk, std::string_view claim);

/// POST {doc, claim} -> {score, v_min, v_max}.
class RemoteChecker : public Checker {
 public:
  RemoteChecker(std::string url, std::unique_ptr<llm::HttpTransport> transport);
  CheckerOutput score(std::string_view chunk, std::string_view claim) override;
  std::string identity() const override { return "remote:" + url_; }

  /// Validates a response body (range ordering, score inside range).
  static CheckerOutput parse_response(const std::string& body);

 private:
  std::string url_;
  std::string path_;
  std::unique_ptr<llm::HttpTransport> transport_;
};

/// Zero-shot LLM checker; the score is 1 for "yes" and 0 for "no" over range (0, 1).
class LlmChecker : public Checker {
 public:
  LlmChecker(llm::Gateway& gateway, std::string model);
  CheckerOutput score(std::string_view chunk, std::string_view claim) override;
  std::string identity() const override { return "llm:" + model_; }

 private:
  llm::Gateway& gateway_;
  std::string model_;
};

/// Max over documents of max over chunks. Any chunk failure propagates.
CheckerOutput score_claim(Checker& checker, std::span<const EvidenceDoc> evidence, std::string_view claim,
                          const ChunkPlan& plan, const text::SentenceSplitter& splitter = text::default_splitter());

enum class ThresholdMode { fixed, midpoint, tuned };

struct ThresholdPolicy {
  ThresholdMode mode = ThresholdMode::fixed;
  std::optional<double> value = 0.5;

  static ThresholdPolicy fixed(double t) { return {ThresholdMode::fixed, t}; }
  static ThresholdPolicy midpoint() { return {ThresholdMode::midpoint, std::nullopt}; }
  static ThresholdPolicy tuned(std::optional<double> t) { return {ThresholdMode::tuned, t}; }

  /// Threshold against a declared range. Throws UsageError for tuned mode without a value.
  double resolve(const ScoreRange& range) const;
  std::string to_string() const;
};

/// Supported iff score > t.
SupportLabel decide(const CheckerOutput& output, const ThresholdPolicy& policy);

/// Every atomic fact decided independently; supported iff all are.
struct DecomposedDecision {
  SupportLabel label = SupportLabel::unsupported;
  std::vector<decomp::AtomicFact> facts;
  std::vector<SupportLabel> fact_labels;
};

DecomposedDecision decide_facts(Checker& checker, std::span<const EvidenceDoc> evidence,
                                std::span<const decomp::AtomicFact> facts, const ChunkPlan& plan,
                                const ThresholdPolicy& policy);

SupportLabel check_decomposed(Checker& checker, llm::Gateway& gateway, std::span<const EvidenceDoc> evidence,
                              std::string_view claim, const ChunkPlan& plan, const ThresholdPolicy& policy);

/// Multi-claim prompt over one shared document; parses {"[1]": "yes", ...}.
std::vector<SupportLabel> parse_batch_response(std::string_view completion, std::size_t claim_count);
std::vector<SupportLabel> check_batch_llm(llm::Gateway& gateway, std::string_view document,
                                          std::span<const std::string> claims);

/// "stub", "remote:URL" or "llm:MODEL".
std::unique_ptr<Checker> make_checker(std::string_view spec, llm::Gateway* gateway);

/// Per-checker default chunk plans: 500 whitespace tokens, 350 for AlignScore-style remotes.
ChunkPlan default_plan_for(std::string_view checker_spec);

}  // namespace factcheck::checker

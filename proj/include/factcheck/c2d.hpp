#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/core.hpp"
#include "factcheck/decomp.hpp"
#include "factcheck/gateway.hpp"

namespace factcheck::c2d {

struct SentencePair {
  std::string first;
  std::string second;
  std::size_t fact_index = 0;

  const std::string& side(std::size_t j) const { return j == 0 ? first : second; }
};

/// One entailment gate evaluation recorded against a generated document.
struct GateCheck {
  std::string gate;  // "support" or "residual"
  int attempt = 0;
  bool entailed = false;
  std::vector<bool> verdicts;
};

/// A generated passage. `omitted` is set only for non-supporting candidates D'_{i\j}.
struct GenDoc {
  std::string text;
  std::optional<std::pair<std::size_t, std::size_t>> omitted;  // (fact i, side j)
  std::vector<GateCheck> gate_trace;
};

struct GateCounter {
  std::size_t rejections = 0;
  std::size_t denominator = 0;
  double rate() const { return denominator == 0 ? 0.0 : static_cast<double>(rejections) / denominator; }
};

struct RejectionStats {
  GateCounter pair_gate;        // sentence pairs failing the iff condition
  GateCounter support_doc_gate; // documents not mentioning every sentence
  GateCounter nonsupport_doc;   // D' candidates that still support a_i

  RejectionStats& operator+=(const RejectionStats& o);
  nlohmann::json to_json() const;
};

struct Options {
  int attempts = 3;
  std::size_t atom_cap = decomp::kDefaultAtomCap;
};

/// Parses "Sentence 1: ...\nSentence 2: ..." into a pair. Throws DataError otherwise.
SentencePair parse_sentence_pair(std::string_view completion, std::size_t fact_index);

/// Generates a sentence pair that supports the fact only jointly. nullopt after `attempts` failures.
std::optional<SentencePair> expand_fact(llm::Gateway& gateway, const decomp::AtomicFact& fact, int attempts,
                                        RejectionStats& stats);

/// Generates D and checks every pair sentence individually against it. nullopt when no attempt passes.
std::optional<GenDoc> gen_supporting_doc(llm::Gateway& gateway, std::span<const SentencePair> pairs, int attempts,
                                         RejectionStats& stats);

/// Premise of the residual gate for omitting side j of fact i: "s_{i,1-j} a_1 ... (all a_k, k != i)".
std::string residual_premise(std::span<const SentencePair> pairs, std::span<const decomp::AtomicFact> facts,
                             std::size_t i, std::size_t j);

/// Candidates D'_{i\j} retained only when the residual gate fails to entail a_i.
std::vector<GenDoc> gen_nonsupporting_docs(llm::Gateway& gateway, std::span<const SentencePair> pairs,
                                           std::span<const decomp::AtomicFact> facts, RejectionStats& stats);

/// A merged subclaim for one fact subset.
struct Subclaim {
  decomp::FactSubset subset;
  std::string text;
};

/// Merges every subset; merge failures drop only that subclaim (logged).
std::vector<Subclaim> merge_subclaims(llm::Gateway& gateway, std::span<const decomp::FactSubset> subsets,
                                      std::span<const decomp::AtomicFact> facts);

/// (D, c', 1) for every subclaim, and for each D'_{i\j}: label 1 iff a_i is not in the subset.
std::vector<SynthTuple> pair_subclaims(const std::string& claim_id, std::span<const Subclaim> subclaims,
                                       const GenDoc& supporting, std::span<const GenDoc> nonsupporting);

struct ClaimInput {
  std::string id;
  std::string text;
};

struct Result {
  std::vector<SynthTuple> tuples;
  RejectionStats stats;
  std::vector<decomp::AtomicFact> facts;
  std::vector<SentencePair> pairs;
  std::optional<GenDoc> supporting;
  std::vector<GenDoc> nonsupporting;
  std::string skipped;  // non-empty reason when the claim produced no data
};

Result run_c2d(llm::Gateway& gateway, const ClaimInput& claim, const Options& options = {});

/// Direct support / 4-revision-type non-support generation; exactly two tuples.
std::vector<SynthTuple> run_c2d_simp(llm::Gateway& gateway, const ClaimInput& claim);

}  // namespace factcheck::c2d

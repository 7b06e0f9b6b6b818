#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "factcheck/core.hpp"
#include "factcheck/decomp.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/text.hpp"

namespace factcheck::d2c {

struct DocChunk {
  std::string parent_id;
  std::size_t index = 0;  // 0, 1, 2
  std::vector<std::string> sentences;

  std::string text() const { return text::join(sentences, " "); }
};

struct SourceDoc {
  std::string id;
  std::vector<std::string> sentences;
};

SourceDoc segment(const EvidenceDoc& doc, const text::SentenceSplitter& splitter = text::default_splitter());

/// Contiguous 3-partition minimizing max |chunk_words - total/3|; ties go to the earliest
/// boundaries. Throws DataError for fewer than three sentences.
std::array<DocChunk, 3> chunk3(const SourceDoc& doc);

/// Single-sentence summary of a chunk. Over 15 words warns, over 20 words is rejected.
std::string summarize_chunk(llm::Gateway& gateway, const DocChunk& chunk);

/// Verdicts L(a_k) of every atomic fact against each checked document, keyed by document label
/// ("ablate:<j>" or "cross:<j>").
struct FactVerdictMatrix {
  std::map<std::string, std::vector<bool>> rows;

  /// Conjunction over the subset's members for one document.
  bool all_supported(const std::string& doc_key, const decomp::FactSubset& subset) const;
};

/// A summary claim of chunk i together with its facts and merged subclaims.
struct ChunkClaim {
  std::size_t chunk = 0;
  std::string text;
  std::vector<decomp::AtomicFact> facts;
  std::vector<std::pair<decomp::FactSubset, std::string>> subclaims;
  FactVerdictMatrix verdicts;
};

/// Sentence-removal augmentation for the chunk's own claim. Failed ablations are skipped.
std::vector<SynthTuple> doc_claim_aug(llm::Gateway& gateway, const DocChunk& chunk, ChunkClaim& claim);

/// Checks each claim of chunk i against every other chunk j != i.
std::vector<SynthTuple> cross_doc_aug(llm::Gateway& gateway, std::span<const DocChunk> chunks,
                                      std::span<ChunkClaim> claims);

struct Options {
  std::size_t atom_cap = decomp::kDefaultAtomCap;
};

struct Result {
  std::vector<SynthTuple> tuples;
  std::array<DocChunk, 3> chunks;
  std::vector<ChunkClaim> claims;
  std::map<std::size_t, std::size_t> ablations_per_chunk;  // chunk index -> ablation documents built
};

Result run_d2c(llm::Gateway& gateway, const SourceDoc& doc, const Options& options = {});

/// Per chunk: the summary tuple plus up to 10 inconsistent edits labeled 0.
std::vector<SynthTuple> run_d2c_simp(llm::Gateway& gateway, const SourceDoc& doc);

}  // namespace factcheck::d2c

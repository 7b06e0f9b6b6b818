#include "factcheck/d2c.hpp"

#include <cstdint>
#include <limits>

#include <spdlog/spdlog.h>

#include "factcheck/errors.hpp"

namespace factcheck::d2c {

using llm::Gateway;
using llm::LlmRequest;

SourceDoc segment(const EvidenceDoc& doc, const text::SentenceSplitter& splitter) {
  return {doc.id, splitter(doc.text)};
}

std::array<DocChunk, 3> chunk3(const SourceDoc& doc) {
  const std::size_t n = doc.sentences.size();
  if (n < 3) throw DataError("document " + doc.id + " is too short to chunk: " + std::to_string(n) + " sentences");
  std::vector<std::int64_t> prefix(n + 1, 0);
  for (std::size_t s = 0; s < n; ++s)
    prefix[s + 1] = prefix[s] + static_cast<std::int64_t>(text::word_count(doc.sentences[s]));
  const std::int64_t total = prefix[n];
  // Compare 3*w against the total to stay in integers.
  auto dev = [&](std::size_t from, std::size_t to) {
    std::int64_t d = 3 * (prefix[to] - prefix[from]) - total;
    return d < 0 ? -d : d;
  };
  std::size_t best_a = 1, best_b = 2;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (std::size_t a = 1; a + 1 < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::int64_t worst = std::max({dev(0, a), dev(a, b), dev(b, n)});
      if (worst < best) {
        best = worst;
        best_a = a;
        best_b = b;
      }
    }
  }
  std::array<DocChunk, 3> out;
  const std::size_t cuts[4] = {0, best_a, best_b, n};
  for (std::size_t c = 0; c < 3; ++c) {
    out[c].parent_id = doc.id;
    out[c].index = c;
    out[c].sentences.assign(doc.sentences.begin() + static_cast<std::ptrdiff_t>(cuts[c]),
                            doc.sentences.begin() + static_cast<std::ptrdiff_t>(cuts[c + 1]));
  }
  return out;
}

std::string summarize_chunk(Gateway& gateway, const DocChunk& chunk) {
  if (chunk.sentences.empty()) throw UsageError("cannot summarize an empty chunk");
  LlmRequest req;
  req.template_name = llm::templates::chunk_summarization;
  req.bindings = {{"DOCUMENT", chunk.text()}};
  auto raw = gateway.complete(req);
  auto summary = text::trim(raw);
  if (text::starts_with_ci(summary, "summary:")) summary = text::trim(std::string_view(summary).substr(8));
  if (summary.empty()) throw DataError("chunk summary is empty");
  if (text::split_sentences(summary).size() != 1) throw DataError("chunk summary is not a single sentence: " + raw);
  auto words = text::word_count(summary);
  if (words > 20) throw DataError("chunk summary has " + std::to_string(words) + " words: " + summary);
  if (words > 15) spdlog::warn("{} chunk {}: summary has {} words (asked for at most 15)", chunk.parent_id,
                               chunk.index, words);
  return summary;
}

bool FactVerdictMatrix::all_supported(const std::string& doc_key, const decomp::FactSubset& subset) const {
  auto it = rows.find(doc_key);
  if (it == rows.end()) throw UsageError("no verdicts recorded for " + doc_key);
  for (auto k : subset.members) {
    if (k >= it->second.size()) throw UsageError("fact index out of range for " + doc_key);
    if (!it->second[k]) return false;
  }
  return true;
}

namespace {

std::vector<bool> fact_verdicts(Gateway& gateway, const std::string& premise,
                                const std::vector<decomp::AtomicFact>& facts) {
  std::vector<bool> v;
  v.reserve(facts.size());
  for (const auto& f : facts) v.push_back(llm::entails(gateway, premise, f.text));
  return v;
}

std::string chunk_id(const std::string& parent, std::size_t chunk) {
  return parent + "/chunk" + std::to_string(chunk);
}

SynthTuple make_tuple(Pipeline pipeline, Origin origin, const std::string& source, EvidenceDoc doc,
                      std::string claim, bool supported) {
  SynthTuple t;
  t.provenance.doc_id = doc.id;
  t.document = std::move(doc);
  t.claim = std::move(claim);
  t.label = label_from_bool(supported);
  t.pipeline = pipeline;
  t.provenance.origin = origin;
  t.provenance.source_id = source;
  return t;
}

}  // namespace

std::vector<SynthTuple> doc_claim_aug(Gateway& gateway, const DocChunk& chunk, ChunkClaim& claim) {
  std::vector<SynthTuple> out;
  if (chunk.sentences.size() < 2) {
    spdlog::warn("{} chunk {}: single sentence, no ablations", chunk.parent_id, chunk.index);
    return out;
  }
  for (std::size_t j = 0; j < chunk.sentences.size(); ++j) {
    std::vector<std::string> kept;
    for (std::size_t s = 0; s < chunk.sentences.size(); ++s)
      if (s != j) kept.push_back(chunk.sentences[s]);
    const auto ablated = text::join(kept, " ");
    const auto key = "ablate:" + std::to_string(j);
    try {
      claim.verdicts.rows[key] = fact_verdicts(gateway, ablated, claim.facts);
    } catch (const Error& e) {
      spdlog::warn("{} chunk {}: ablation of sentence {} skipped: {}", chunk.parent_id, chunk.index, j, e.what());
      continue;
    }
    const auto id = chunk_id(chunk.parent_id, chunk.index) + "-s" + std::to_string(j);
    for (const auto& [subset, text] : claim.subclaims) {
      auto t = make_tuple(Pipeline::d2c, Origin::sentence_ablation, chunk.parent_id, {id, ablated}, text,
                          claim.verdicts.all_supported(key, subset));
      t.provenance.subset = subset.members;
      t.provenance.chunk = chunk.index;
      t.provenance.removed_sentence = j;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<SynthTuple> cross_doc_aug(Gateway& gateway, std::span<const DocChunk> chunks,
                                      std::span<ChunkClaim> claims) {
  std::vector<SynthTuple> out;
  for (auto& claim : claims) {
    for (const auto& other : chunks) {
      if (other.index == claim.chunk) continue;
      const auto key = "cross:" + std::to_string(other.index);
      const auto premise = other.text();
      try {
        claim.verdicts.rows[key] = fact_verdicts(gateway, premise, claim.facts);
      } catch (const Error& e) {
        spdlog::warn("{}: claim of chunk {} vs chunk {} skipped: {}", other.parent_id, claim.chunk, other.index,
                     e.what());
        continue;
      }
      const auto id = chunk_id(other.parent_id, other.index);
      for (const auto& [subset, text] : claim.subclaims) {
        auto t = make_tuple(Pipeline::d2c, Origin::cross_chunk, other.parent_id, {id, premise}, text,
                            claim.verdicts.all_supported(key, subset));
        t.provenance.subset = subset.members;
        t.provenance.chunk = claim.chunk;
        t.provenance.premise_chunk = other.index;
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

Result run_d2c(Gateway& gateway, const SourceDoc& doc, const Options& options) {
  Result r;
  r.chunks = chunk3(doc);
  for (const auto& chunk : r.chunks) {
    ChunkClaim claim;
    claim.chunk = chunk.index;
    try {
      claim.text = summarize_chunk(gateway, chunk);
    } catch (const DataError& e) {
      spdlog::warn("{} chunk {}: summary rejected: {}", doc.id, chunk.index, e.what());
      continue;
    }
    auto t = make_tuple(Pipeline::d2c, Origin::chunk_summary, doc.id, {chunk_id(doc.id, chunk.index), chunk.text()},
                        claim.text, true);
    t.provenance.chunk = chunk.index;
    r.tuples.push_back(std::move(t));

    try {
      claim.facts = decomp::decompose(gateway, claim.text);
    } catch (const DataError& e) {
      spdlog::warn("{} chunk {}: decomposition failed, no augmentation: {}", doc.id, chunk.index, e.what());
      continue;
    }
    if (claim.facts.size() > options.atom_cap) {
      spdlog::warn("{} chunk {}: {} atomic facts exceed the cap", doc.id, chunk.index, claim.facts.size());
      continue;
    }
    for (const auto& subset : decomp::power_set(claim.facts.size(), options.atom_cap)) {
      try {
        claim.subclaims.emplace_back(subset, decomp::merge(gateway, subset, claim.facts));
      } catch (const DataError& e) {
        spdlog::warn("{} chunk {}: subclaim merge failed, subset dropped: {}", doc.id, chunk.index, e.what());
      }
    }
    r.claims.push_back(std::move(claim));
  }

  for (auto& claim : r.claims) {
    auto tuples = doc_claim_aug(gateway, r.chunks[claim.chunk], claim);
    std::size_t ablations = 0;
    for (const auto& [key, row] : claim.verdicts.rows)
      if (key.rfind("ablate:", 0) == 0) ++ablations;
    r.ablations_per_chunk[claim.chunk] = ablations;
    r.tuples.insert(r.tuples.end(), tuples.begin(), tuples.end());
  }
  auto cross = cross_doc_aug(gateway, r.chunks, r.claims);
  r.tuples.insert(r.tuples.end(), cross.begin(), cross.end());
  return r;
}

std::vector<SynthTuple> run_d2c_simp(Gateway& gateway, const SourceDoc& doc) {
  std::vector<SynthTuple> out;
  for (const auto& chunk : chunk3(doc)) {
    const auto summary = summarize_chunk(gateway, chunk);
    const EvidenceDoc d{chunk_id(doc.id, chunk.index), chunk.text()};
    auto pos = make_tuple(Pipeline::d2c_simp, Origin::chunk_summary, doc.id, d, summary, true);
    pos.provenance.chunk = chunk.index;
    out.push_back(std::move(pos));

    LlmRequest req;
    req.template_name = llm::templates::d2c_simp_edit;
    req.bindings = {{"DOCUMENT", d.text}, {"CONSISTENT_SUMMARY", summary}};
    auto raw = gateway.complete(req);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text::extract_json_object(raw));
    } catch (const std::exception&) {
      throw DataError("d2c-simp: malformed edit JSON: " + raw);
    }
    if (!j.is_object() || !j.contains("inconsistent_summaries") || !j["inconsistent_summaries"].is_array())
      throw DataError("d2c-simp: missing inconsistent_summaries in: " + raw);
    std::size_t k = 0;
    for (const auto& e : j["inconsistent_summaries"]) {
      if (k == 10) break;
      if (!e.is_string()) throw DataError("d2c-simp: non-string edit in: " + raw);
      auto edit = text::trim(e.get<std::string>());
      if (edit.empty()) continue;
      auto neg = make_tuple(Pipeline::d2c_simp, Origin::summary_edit, doc.id, d, edit, false);
      neg.provenance.chunk = chunk.index;
      neg.provenance.edit_index = k++;
      out.push_back(std::move(neg));
    }
  }
  return out;
}

}  // namespace factcheck::d2c

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace factcheck {

/// Binary entailment verdict. There is deliberately no third value.
enum class SupportLabel : int { unsupported = 0, supported = 1 };

inline SupportLabel label_from_bool(bool supported) {
  return supported ? SupportLabel::supported : SupportLabel::unsupported;
}
inline bool is_supported(SupportLabel l) { return l == SupportLabel::supported; }
inline int to_int(SupportLabel l) { return static_cast<int>(l); }
std::string_view to_string(SupportLabel l);

struct EvidenceDoc {
  std::string id;
  std::string text;
};

/// A claim sentence together with its preceding context and the evidence it is checked against.
struct GroundedClaim {
  std::string id;
  std::string text;
  std::vector<std::string> context;
  std::vector<EvidenceDoc> evidence;
  std::string query_group;
};

enum class Split { validation, test };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct BenchRecord {
  std::string dataset;
  std::optional<Split> split;
  GroundedClaim grounded;
  SupportLabel gold = SupportLabel::unsupported;
  std::string raw_label;
};

enum class Pipeline { c2d, d2c, c2d_simp, d2c_simp };
std::string_view to_string(Pipeline p);
Pipeline parse_pipeline(std::string_view s);

/// Which generation path produced a synthetic tuple.
enum class Origin {
  supporting_doc,     // C2D: (D, c', 1)
  omission_doc,       // C2D: D' with one sentence of a pair omitted
  simp_support,       // C2D-Simp supporting article
  simp_revision,      // C2D-Simp revised article
  chunk_summary,      // D2C: (D_i, c_i, 1)
  sentence_ablation,  // D2C: D_i with sentence j removed
  cross_chunk,        // D2C: claim of chunk i against chunk j
  summary_edit,       // D2C-Simp inconsistent summary
};
std::string_view to_string(Origin o);
Origin parse_origin(std::string_view s);

/// Structured trace of how a tuple was generated. All indices are 0-based.
struct Provenance {
  Origin origin = Origin::supporting_doc;
  std::string source_id;  // claim id (C2D) or document id (D2C)
  std::string doc_id;
  std::vector<std::size_t> subset;  // atomic-fact indices merged into the claim
  std::optional<std::size_t> omitted_fact;
  std::optional<std::size_t> omitted_side;
  std::optional<std::size_t> chunk;
  std::optional<std::size_t> removed_sentence;
  std::optional<std::size_t> premise_chunk;
  std::optional<std::size_t> edit_index;
  std::optional<std::string> revision_type;
};

struct SynthTuple {
  EvidenceDoc document;
  std::string claim;
  SupportLabel label = SupportLabel::unsupported;
  Pipeline pipeline = Pipeline::c2d;
  Provenance provenance;
};

nlohmann::json to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthTuple& t);
SynthTuple synth_tuple_from_json(const nlohmann::json& j);

/// Maps a source-dataset label onto the binary scheme. Throws DataError on unknown labels.
SupportLabel unify_label(std::string_view raw, std::string_view dataset = {});

/// Partitions records into validation/test by query group. Deterministic in (ids, groups, seed, fraction).
std::vector<BenchRecord> make_split(std::vector<BenchRecord> records, std::uint64_t seed, double fraction);

}  // namespace factcheck

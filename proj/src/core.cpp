#include "factcheck/core.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

#include "factcheck/errors.hpp"
#include "factcheck/random.hpp"
#include "factcheck/text.hpp"

namespace factcheck {

std::string_view to_string(SupportLabel l) { return l == SupportLabel::supported ? "supported" : "unsupported"; }

std::string_view to_string(Split s) { return s == Split::validation ? "validation" : "test"; }

Split parse_split(std::string_view s) {
  if (s == "validation" || s == "dev") return Split::validation;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::c2d: return "C2D";
    case Pipeline::d2c: return "D2C";
    case Pipeline::c2d_simp: return "C2D-Simp";
    case Pipeline::d2c_simp: return "D2C-Simp";
  }
  return "C2D";
}

Pipeline parse_pipeline(std::string_view s) {
  for (auto p : {Pipeline::c2d, Pipeline::d2c, Pipeline::c2d_simp, Pipeline::d2c_simp})
    if (to_string(p) == s) return p;
  throw DataError("unknown pipeline '" + std::string(s) + "'");
}

namespace {
constexpr std::pair<Origin, std::string_view> kOrigins[] = {
    {Origin::supporting_doc, "supporting-doc"},   {Origin::omission_doc, "omission-doc"},
    {Origin::simp_support, "simp-support"},       {Origin::simp_revision, "simp-revision"},
    {Origin::chunk_summary, "chunk-summary"},     {Origin::sentence_ablation, "sentence-ablation"},
    {Origin::cross_chunk, "cross-chunk"},         {Origin::summary_edit, "summary-edit"},
};
}  // namespace

std::string_view to_string(Origin o) {
  for (auto& [k, v] : kOrigins)
    if (k == o) return v;
  return "supporting-doc";
}

Origin parse_origin(std::string_view s) {
  for (auto& [k, v] : kOrigins)
    if (v == s) return k;
  throw DataError("unknown provenance origin '" + std::string(s) + "'");
}

nlohmann::json to_json(const Provenance& p) {
  nlohmann::json j;
  j["origin"] = to_string(p.origin);
  j["source_id"] = p.source_id;
  j["doc_id"] = p.doc_id;
  j["subset"] = p.subset;
  if (p.omitted_fact) j["omitted_fact"] = *p.omitted_fact;
  if (p.omitted_side) j["omitted_side"] = *p.omitted_side;
  if (p.chunk) j["chunk"] = *p.chunk;
  if (p.removed_sentence) j["removed_sentence"] = *p.removed_sentence;
  if (p.premise_chunk) j["premise_chunk"] = *p.premise_chunk;
  if (p.edit_index) j["edit_index"] = *p.edit_index;
  if (p.revision_type) j["revision_type"] = *p.revision_type;
  return j;
}

Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  p.origin = parse_origin(j.at("origin").get<std::string>());
  p.source_id = j.value("source_id", "");
  p.doc_id = j.value("doc_id", "");
  p.subset = j.value("subset", std::vector<std::size_t>{});
  auto opt = [&](const char* k, std::optional<std::size_t>& out) {
    if (j.contains(k)) out = j.at(k).get<std::size_t>();
  };
  opt("omitted_fact", p.omitted_fact);
  opt("omitted_side", p.omitted_side);
  opt("chunk", p.chunk);
  opt("removed_sentence", p.removed_sentence);
  opt("premise_chunk", p.premise_chunk);
  opt("edit_index", p.edit_index);
  if (j.contains("revision_type")) p.revision_type = j.at("revision_type").get<std::string>();
  return p;
}

nlohmann::json to_json(const SynthTuple& t) {
  nlohmann::json j;
  j["doc"] = t.document.text;
  j["claim"] = t.claim;
  j["label"] = to_int(t.label);
  j["pipeline"] = to_string(t.pipeline);
  j["provenance"] = to_json(t.provenance);
  return j;
}

SynthTuple synth_tuple_from_json(const nlohmann::json& j) {
  SynthTuple t;
  t.provenance = provenance_from_json(j.at("provenance"));
  t.document = {t.provenance.doc_id, j.at("doc").get<std::string>()};
  t.claim = j.at("claim").get<std::string>();
  t.label = label_from_bool(j.at("label").get<int>() == 1);
  t.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
  return t;
}

namespace {

std::string normalize_label(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char c : text::trim(raw)) {
    if (c == '-' || c == '_' || c == ' ' || c == '\t') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

const std::unordered_map<std::string, SupportLabel>& label_table() {
  static const std::unordered_map<std::string, SupportLabel> table = [] {
    std::unordered_map<std::string, SupportLabel> t;
    for (auto s : {"supported", "fully attributable", "completely support", "complete"})
      t[s] = SupportLabel::supported;
    for (auto s : {"unsupported", "not supported", "non supported", "partially supported", "partially support",
                   "partial support", "partially attributable", "contradictory", "partial", "refute", "refuted",
                   "irrelevant", "incomplete"})
      t[s] = SupportLabel::unsupported;
    // Binary source labels (AggreFact, TofuEval, ClaimVerify) pass through.
    t["1"] = SupportLabel::supported;
    t["0"] = SupportLabel::unsupported;
    return t;
  }();
  return table;
}

}  // namespace

SupportLabel unify_label(std::string_view raw, std::string_view dataset) {
  const auto& table = label_table();
  auto it = table.find(normalize_label(raw));
  if (it == table.end()) {
    std::string msg = "unknown label '" + std::string(raw) + "'";
    if (!dataset.empty()) msg += " in dataset '" + std::string(dataset) + "'";
    throw DataError(msg);
  }
  return it->second;
}

std::vector<BenchRecord> make_split(std::vector<BenchRecord> records, std::uint64_t seed, double fraction) {
  if (records.empty()) throw DataError("cannot split an empty record list");
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("split fraction must be in (0, 1)");

  // Group ids are taken in sorted order so input order does not matter.
  std::map<std::string, std::size_t> group_sizes;
  for (const auto& r : records) {
    if (r.grounded.query_group.empty()) throw DataError("record '" + r.grounded.id + "' has no query_group");
    ++group_sizes[r.grounded.query_group];
  }
  if (group_sizes.size() < 2)
    throw DataError("cannot split: a single query group covers all " + std::to_string(records.size()) + " records");

  std::vector<std::pair<std::string, std::size_t>> groups(group_sizes.begin(), group_sizes.end());
  auto order = seeded_permutation(groups.size(), seed);

  const double target = fraction * static_cast<double>(records.size());
  double assigned = 0.0;
  std::set<std::string> validation;
  std::vector<std::string> val_order;
  for (auto gi : order) {
    const auto& [name, size] = groups[gi];
    double after = assigned + static_cast<double>(size);
    bool take = after <= target || (assigned < target && after - target < target - assigned);
    if (take) {
      validation.insert(name);
      val_order.push_back(name);
      assigned = after;
    }
  }
  if (validation.empty()) {
    validation.insert(groups[order.front()].first);
  } else if (validation.size() == groups.size()) {
    validation.erase(val_order.back());
  }

  for (auto& r : records)
    r.split = validation.count(r.grounded.query_group) ? Split::validation : Split::test;
  return records;
}

}  // namespace factcheck

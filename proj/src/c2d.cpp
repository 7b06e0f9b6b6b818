#include "factcheck/c2d.hpp"

#include <spdlog/spdlog.h>

#include "factcheck/errors.hpp"
#include "factcheck/text.hpp"

namespace factcheck::c2d {

using llm::Gateway;
using llm::LlmRequest;

RejectionStats& RejectionStats::operator+=(const RejectionStats& o) {
  for (auto [mine, theirs] : {std::pair{&pair_gate, &o.pair_gate}, std::pair{&support_doc_gate, &o.support_doc_gate},
                              std::pair{&nonsupport_doc, &o.nonsupport_doc}}) {
    mine->rejections += theirs->rejections;
    mine->denominator += theirs->denominator;
  }
  return *this;
}

nlohmann::json RejectionStats::to_json() const {
  auto one = [](const GateCounter& c) {
    return nlohmann::json{{"rejections", c.rejections}, {"denominator", c.denominator}, {"rate", c.rate()}};
  };
  return {{"pair_gate", one(pair_gate)}, {"support_doc_gate", one(support_doc_gate)},
          {"nonsupport_doc", one(nonsupport_doc)}};
}

namespace {

std::optional<std::size_t> find_label(const std::string& lower, std::string_view label) {
  auto pos = lower.find(label);
  if (pos == std::string::npos) return std::nullopt;
  return pos;
}

std::string rest_of_line(std::string_view s) {
  auto nl = s.find('\n');
  return text::trim(s.substr(0, nl));
}

std::vector<std::string> all_sentences(std::span<const SentencePair> pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    out.push_back(p.first);
    out.push_back(p.second);
  }
  return out;
}

std::string generate_passage(Gateway& gateway, const std::vector<std::string>& facts) {
  LlmRequest req;
  req.template_name = llm::templates::passage_gen;
  req.bindings = {{"FACTS", llm::bullet_list(facts)}};
  return text::trim(gateway.complete(req));
}

}  // namespace

SentencePair parse_sentence_pair(std::string_view completion, std::size_t fact_index) {
  std::string raw(completion);
  std::string lower = text::to_lower(raw);
  auto p1 = find_label(lower, "sentence 1:");
  auto p2 = find_label(lower, "sentence 2:");
  if (!p1 || !p2 || *p2 < *p1) throw DataError("atomic expansion: expected 'Sentence 1:' and 'Sentence 2:' in: " + raw);
  SentencePair pair;
  pair.first = text::trim(std::string_view(raw).substr(*p1 + 11, *p2 - *p1 - 11));
  pair.second = rest_of_line(std::string_view(raw).substr(*p2 + 11));
  pair.fact_index = fact_index;
  if (pair.first.empty() || pair.second.empty()) throw DataError("atomic expansion: empty sentence in: " + raw);
  return pair;
}

std::optional<SentencePair> expand_fact(Gateway& gateway, const decomp::AtomicFact& fact, int attempts,
                                        RejectionStats& stats) {
  if (attempts < 1) throw UsageError("attempts must be >= 1");
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    ++stats.pair_gate.denominator;
    LlmRequest req;
    req.template_name = llm::templates::atomic_expansion;
    req.bindings = {{"CLAIM", fact.text}};
    try {
      auto pair = parse_sentence_pair(gateway.complete(req), fact.index);
      auto joint = text::ensure_terminal(pair.first) + " " + text::ensure_terminal(pair.second);
      if (llm::entails(gateway, joint, fact.text) && !llm::entails(gateway, pair.first, fact.text) &&
          !llm::entails(gateway, pair.second, fact.text))
        return pair;
      spdlog::debug("fact {}: pair attempt {} failed the iff gate", fact.index, attempt);
    } catch (const DataError& e) {
      spdlog::debug("fact {}: pair attempt {} unusable: {}", fact.index, attempt, e.what());
    }
    ++stats.pair_gate.rejections;
  }
  return std::nullopt;
}

std::optional<GenDoc> gen_supporting_doc(Gateway& gateway, std::span<const SentencePair> pairs, int attempts,
                                         RejectionStats& stats) {
  if (pairs.empty()) throw UsageError("supporting document needs at least one sentence pair");
  if (attempts < 1) throw UsageError("attempts must be >= 1");
  auto sentences = all_sentences(pairs);
  GenDoc doc;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    ++stats.support_doc_gate.denominator;
    GateCheck check{"support", attempt, false, {}};
    try {
      doc.text = generate_passage(gateway, sentences);
      if (doc.text.empty()) throw DataError("empty passage");
      bool all = true;
      for (const auto& s : sentences) {
        bool v = llm::entails(gateway, doc.text, s);
        check.verdicts.push_back(v);
        all = all && v;
      }
      check.entailed = all;
    } catch (const DataError& e) {
      spdlog::debug("supporting document attempt {} unusable: {}", attempt, e.what());
    }
    doc.gate_trace.push_back(check);
    if (check.entailed) return doc;
    ++stats.support_doc_gate.rejections;
  }
  return std::nullopt;
}

std::string residual_premise(std::span<const SentencePair> pairs, std::span<const decomp::AtomicFact> facts,
                             std::size_t i, std::size_t j) {
  if (i >= pairs.size() || j > 1) throw UsageError("residual premise index out of range");
  std::vector<std::string> parts{text::ensure_terminal(pairs[i].side(1 - j))};
  for (const auto& f : facts)
    if (f.index != pairs[i].fact_index) parts.push_back(text::ensure_terminal(f.text));
  return text::join(parts, " ");
}

std::vector<GenDoc> gen_nonsupporting_docs(Gateway& gateway, std::span<const SentencePair> pairs,
                                           std::span<const decomp::AtomicFact> facts, RejectionStats& stats) {
  if (pairs.empty()) throw UsageError("non-supporting documents need at least one sentence pair");
  std::vector<GenDoc> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto fact_index = pairs[i].fact_index;
    const auto& fact = facts[fact_index];
    for (std::size_t j = 0; j < 2; ++j) {
      ++stats.nonsupport_doc.denominator;
      // The residual gate does not depend on D', so it runs first and saves a generation call.
      bool still_supported = false;
      try {
        still_supported = llm::entails(gateway, residual_premise(pairs, facts, i, j), fact.text);
      } catch (const DataError& e) {
        spdlog::warn("fact {} side {}: residual gate unusable, candidate dropped: {}", fact_index, j, e.what());
        ++stats.nonsupport_doc.rejections;
        continue;
      }
      if (still_supported) {
        ++stats.nonsupport_doc.rejections;
        continue;
      }
      std::vector<std::string> kept;
      for (std::size_t p = 0; p < pairs.size(); ++p)
        for (std::size_t side = 0; side < 2; ++side)
          if (!(p == i && side == j)) kept.push_back(pairs[p].side(side));
      GenDoc doc;
      try {
        doc.text = generate_passage(gateway, kept);
      } catch (const Error& e) {
        spdlog::warn("fact {} side {}: generation failed, candidate skipped: {}", fact_index, j, e.what());
        continue;
      }
      if (doc.text.empty()) {
        spdlog::warn("fact {} side {}: empty passage, candidate skipped", fact_index, j);
        continue;
      }
      doc.omitted = std::pair{fact_index, j};
      doc.gate_trace.push_back({"residual", 1, false, {false}});
      out.push_back(std::move(doc));
    }
  }
  return out;
}

std::vector<Subclaim> merge_subclaims(Gateway& gateway, std::span<const decomp::FactSubset> subsets,
                                      std::span<const decomp::AtomicFact> facts) {
  std::vector<Subclaim> out;
  for (const auto& s : subsets) {
    try {
      out.push_back({s, decomp::merge(gateway, s, facts)});
    } catch (const DataError& e) {
      spdlog::warn("subclaim merge failed, subset dropped: {}", e.what());
    }
  }
  return out;
}

std::vector<SynthTuple> pair_subclaims(const std::string& claim_id, std::span<const Subclaim> subclaims,
                                       const GenDoc& supporting, std::span<const GenDoc> nonsupporting) {
  std::vector<SynthTuple> out;
  const std::string support_id = claim_id + "/D";
  for (const auto& sc : subclaims) {
    SynthTuple t;
    t.document = {support_id, supporting.text};
    t.claim = sc.text;
    t.label = SupportLabel::supported;
    t.pipeline = Pipeline::c2d;
    t.provenance.origin = Origin::supporting_doc;
    t.provenance.source_id = claim_id;
    t.provenance.doc_id = support_id;
    t.provenance.subset = sc.subset.members;
    out.push_back(std::move(t));
  }
  for (const auto& doc : nonsupporting) {
    if (!doc.omitted) throw UsageError("non-supporting document without an omitted sentence");
    auto [i, j] = *doc.omitted;
    const std::string id = claim_id + "/D'" + std::to_string(i) + "." + std::to_string(j);
    for (const auto& sc : subclaims) {
      SynthTuple t;
      t.document = {id, doc.text};
      t.claim = sc.text;
      t.label = label_from_bool(!sc.subset.contains(i));
      t.pipeline = Pipeline::c2d;
      t.provenance.origin = Origin::omission_doc;
      t.provenance.source_id = claim_id;
      t.provenance.doc_id = id;
      t.provenance.subset = sc.subset.members;
      t.provenance.omitted_fact = i;
      t.provenance.omitted_side = j;
      out.push_back(std::move(t));
    }
  }
  return out;
}

Result run_c2d(Gateway& gateway, const ClaimInput& claim, const Options& options) {
  Result r;
  try {
    r.facts = decomp::decompose(gateway, claim.text);
  } catch (const DataError& e) {
    r.skipped = std::string("decomposition failed: ") + e.what();
    return r;
  }
  if (r.facts.size() > options.atom_cap) {
    r.skipped = "too many atomic facts (" + std::to_string(r.facts.size()) + ")";
    return r;
  }
  if (r.facts.size() == 1) spdlog::info("{}: single atomic fact, no contrastive subclaims", claim.id);

  for (const auto& f : r.facts) {
    auto pair = expand_fact(gateway, f, options.attempts, r.stats);
    if (!pair) {
      r.skipped = "sentence pair gate exhausted for fact " + std::to_string(f.index);
      return r;
    }
    r.pairs.push_back(std::move(*pair));
  }

  r.supporting = gen_supporting_doc(gateway, r.pairs, options.attempts, r.stats);
  if (!r.supporting) {
    r.skipped = "supporting document gate exhausted";
    return r;
  }
  r.nonsupporting = gen_nonsupporting_docs(gateway, r.pairs, r.facts, r.stats);

  auto subsets = decomp::power_set(r.facts.size(), options.atom_cap);
  auto subclaims = merge_subclaims(gateway, subsets, r.facts);
  r.tuples = pair_subclaims(claim.id, subclaims, *r.supporting, r.nonsupporting);
  return r;
}

std::vector<SynthTuple> run_c2d_simp(Gateway& gateway, const ClaimInput& claim) {
  if (text::trim(claim.text).empty()) throw UsageError("c2d-simp: empty claim");
  LlmRequest support;
  support.template_name = llm::templates::c2d_simp_support;
  support.bindings = {{"CLAIM", claim.text}};
  auto article = text::trim(gateway.complete(support));
  if (article.empty()) throw DataError("c2d-simp: empty supporting article for " + claim.id);

  LlmRequest revise;
  revise.template_name = llm::templates::c2d_simp_nonsupport;
  revise.bindings = {{"CLAIM", claim.text}, {"ARTICLE", article}};
  auto raw = gateway.complete(revise);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::extract_json_object(raw));
  } catch (const std::exception&) {
    throw DataError("c2d-simp: malformed revision JSON: " + raw);
  }
  if (!j.is_object() || !j.contains("revised_article") || !j["revised_article"].is_string())
    throw DataError("c2d-simp: missing revised_article in: " + raw);
  std::string revision_type;
  if (j.contains("revision_type") && j["revision_type"].is_string()) revision_type = j["revision_type"];
  auto revised = text::trim(j["revised_article"].get<std::string>());
  if (revised.empty()) throw DataError("c2d-simp: empty revised_article for " + claim.id);

  std::vector<SynthTuple> out(2);
  out[0].document = {claim.id + "/simp-support", article};
  out[0].label = SupportLabel::supported;
  out[0].provenance.origin = Origin::simp_support;
  out[1].document = {claim.id + "/simp-revision", revised};
  out[1].label = SupportLabel::unsupported;
  out[1].provenance.origin = Origin::simp_revision;
  out[1].provenance.revision_type = revision_type;
  for (auto& t : out) {
    t.claim = claim.text;
    t.pipeline = Pipeline::c2d_simp;
    t.provenance.source_id = claim.id;
    t.provenance.doc_id = t.document.id;
  }
  return out;
}

}  // namespace factcheck::c2d

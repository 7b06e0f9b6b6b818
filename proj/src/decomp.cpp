#include "factcheck/decomp.hpp"

#include <algorithm>

#include <json.hpp>

#include "factcheck/errors.hpp"
#include "factcheck/text.hpp"

namespace factcheck::decomp {

bool FactSubset::contains(std::size_t i) const {
  return std::binary_search(members.begin(), members.end(), i);
}

namespace {

// Returns the remainder after a bullet marker, or nullopt when the line has none.
std::optional<std::string_view> strip_bullet(std::string_view line) {
  for (std::string_view marker : {std::string_view("-"), std::string_view("–"), std::string_view("•")}) {
    if (line.substr(0, marker.size()) == marker) return line.substr(marker.size());
  }
  return std::nullopt;
}

}  // namespace

std::vector<AtomicFact> parse_fact_bullets(std::string_view completion) {
  std::vector<AtomicFact> facts;
  std::size_t start = 0;
  while (start <= completion.size()) {
    auto end = completion.find('\n', start);
    if (end == std::string_view::npos) end = completion.size();
    auto line = text::trim(completion.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    auto rest = strip_bullet(line);
    if (!rest) throw DataError("decomposition: expected '- fact' bullets, got: " + std::string(completion));
    auto fact = text::trim(*rest);
    if (fact.empty()) throw DataError("decomposition: empty bullet in: " + std::string(completion));
    facts.push_back({fact, facts.size()});
  }
  if (facts.empty()) throw DataError("decomposition: no bullets in: " + std::string(completion));
  return facts;
}

std::vector<AtomicFact> decompose(llm::Gateway& gateway, std::string_view claim) {
  if (text::trim(claim).empty()) throw UsageError("decompose: empty claim");
  llm::LlmRequest req;
  req.template_name = llm::templates::sentence_decomposition;
  req.bindings = {{"SENTENCE", std::string(claim)}};
  return parse_fact_bullets(gateway.complete(req));
}

std::vector<FactSubset> power_set(std::size_t fact_count, std::size_t cap) {
  if (fact_count == 0) throw DataError("power set of zero facts");
  if (fact_count > cap)
    throw DataError("too many atomic facts: " + std::to_string(fact_count) + " > cap " + std::to_string(cap));
  std::vector<FactSubset> out;
  out.reserve((std::size_t{1} << fact_count) - 1);
  for (std::size_t k = 1; k <= fact_count; ++k) {
    // Lexicographic k-combinations of [0, n).
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      out.push_back({idx});
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == fact_count - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  return out;
}

std::string merge(llm::Gateway& gateway, const FactSubset& subset, std::span<const AtomicFact> facts) {
  if (subset.members.empty()) throw UsageError("merge: empty subset");
  for (auto i : subset.members)
    if (i >= facts.size()) throw UsageError("merge: fact index " + std::to_string(i) + " out of range");
  if (subset.members.size() == 1) return facts[subset.members.front()].text;

  std::vector<std::string> items;
  for (auto i : subset.members) items.push_back(facts[i].text);
  llm::LlmRequest req;
  req.template_name = llm::templates::merge_facts;
  req.bindings = {{"FACTS", llm::bullet_list(items)}};
  auto raw = gateway.complete(req);
  auto out = text::trim(raw);
  if (text::starts_with_ci(out, "sentence:")) out = text::trim(std::string_view(out).substr(9));
  auto sentences = text::split_sentences(out);
  if (sentences.size() != 1) throw DataError("merge: expected one sentence, got: " + raw);
  return out;
}

Decontextualized parse_decontext_response(std::string_view completion, std::string_view claim) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::extract_json_object(completion));
  } catch (const std::exception& e) {
    throw DataError("decontextualize: malformed JSON: " + std::string(completion));
  }
  if (!j.is_object() || !j.contains("label") || !j["label"].is_string())
    throw DataError("decontextualize: missing label in: " + std::string(completion));
  auto label = text::to_lower(text::trim(j["label"].get<std::string>()));
  if (label == "yes") return {false, std::string(claim)};
  if (label != "no") throw DataError("decontextualize: label must be yes or no, got '" + label + "'");
  std::string rewritten;
  if (j.contains("decontext") && j["decontext"].is_string()) rewritten = text::trim(j["decontext"].get<std::string>());
  if (rewritten.empty() || rewritten == "NA")
    throw DataError("decontextualize: label 'no' without a rewritten claim: " + std::string(completion));
  return {true, rewritten};
}

Decontextualized decontextualize(llm::Gateway& gateway, std::string_view claim, std::span<const std::string> context) {
  llm::LlmRequest req;
  req.template_name = llm::templates::decontextualize;
  // The exemplars show the claim as the last sentence of its own context.
  std::vector<std::string> ctx(context.begin(), context.end());
  ctx.emplace_back(claim);
  req.bindings = {{"CONTEXT", text::join(ctx, " ")}, {"CLAIM", std::string(claim)}};
  return parse_decontext_response(gateway.complete(req), claim);
}

}  // namespace factcheck::decomp

#include "factcheck/checker.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include <json.hpp>

#include "factcheck/errors.hpp"

namespace factcheck::checker {

using nlohmann::json;

std::string ChunkPlan::to_string() const {
  return std::string(strategy == ChunkStrategy::whitespace ? "whitespace" : "sentence") + ":" + std::to_string(size);
}

ChunkPlan ChunkPlan::parse(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw UsageError("chunk plan must look like whitespace:500, got '" + std::string(spec) + "'");
  auto name = spec.substr(0, colon);
  auto num = spec.substr(colon + 1);
  ChunkPlan plan;
  if (name == "whitespace")
    plan.strategy = ChunkStrategy::whitespace;
  else if (name == "sentence")
    plan.strategy = ChunkStrategy::sentence;
  else
    throw UsageError("unknown chunk strategy '" + std::string(name) + "'");
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), plan.size);
  if (ec != std::errc() || p != num.data() + num.size() || plan.size == 0)
    throw UsageError("chunk size must be a positive integer, got '" + std::string(num) + "'");
  return plan;
}

std::vector<std::string> chunk(std::string_view document, const ChunkPlan& plan, const text::SentenceSplitter& splitter) {
  if (plan.size == 0) throw UsageError("chunk size must be positive");
  std::vector<std::string> out;
  if (plan.strategy == ChunkStrategy::whitespace) {
    auto tokens = text::whitespace_tokens(document);
    for (std::size_t i = 0; i < tokens.size(); i += plan.size) {
      std::string c;
      for (std::size_t k = i; k < std::min(tokens.size(), i + plan.size); ++k) {
        if (k > i) c += ' ';
        c += tokens[k];
      }
      out.push_back(std::move(c));
    }
    return out;
  }
  std::string current;
  std::size_t current_words = 0;
  for (const auto& s : splitter(document)) {
    auto w = text::word_count(s);
    if (w == 0) continue;
    if (current_words > 0 && current_words + w > plan.size) {
      out.push_back(std::move(current));
      current.clear();
      current_words = 0;
    }
    if (!current.empty()) current += ' ';
    current += s;
    current_words += w;
  }
  if (current_words > 0) out.push_back(std::move(current));
  return out;
}

// ---------------------------------------------------------------- stub

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",     "an",    "and",   "are",  "as",   "at",   "be",    "been", "but",  "by",   "for",  "from",
      "had",   "has",   "have",  "he",   "her",  "his",  "in",    "into", "is",   "it",   "its",  "of",
      "on",    "or",    "she",   "that", "the",  "their", "them", "they", "this", "to",   "was",  "were",
      "which", "while", "who",   "will", "with", "would", "not",  "no",   "than", "then", "there", "these",
      "those", "i",     "we",    "you",  "our",  "your", "after", "also", "about", "over", "so",  "such"};
  return words;
}

std::vector<std::string> lower_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::vector<std::string> LexicalStub::content_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& w : lower_words(s))
    if (!stopwords().count(w)) out.push_back(std::move(w));
  return out;
}

CheckerOutput LexicalStub::score(std::string_view chunk, std::string_view claim) {
  auto claim_words = content_words(claim);
  // A claim made only of stopwords is scored on all of its words.
  if (claim_words.empty()) claim_words = lower_words(claim);
  if (claim_words.empty()) throw DataError("stub checker: empty claim");
  std::set<std::string> wanted(claim_words.begin(), claim_words.end());
  auto chunk_words = lower_words(chunk);
  std::set<std::string> have(chunk_words.begin(), chunk_words.end());
  std::size_t hit = 0;
  for (const auto& w : wanted) hit += have.count(w);
  return {static_cast<double>(hit) / static_cast<double>(wanted.size()), {0.0, 1.0}};
}

CheckerOutput lexical_stub(std::string_view chunk, std::string_view claim) {
  LexicalStub stub;
  return stub.score(chunk, claim);
}

// ---------------------------------------------------------------- remote

namespace {

std::string url_path(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw UsageError("remote checker URL needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  return slash == std::string::npos ? "/" : url.substr(slash);
}

std::string url_origin(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw UsageError("remote checker URL needs a scheme: " + url);
  return url.substr(0, url.find('/', scheme + 3));
}

}  // namespace

RemoteChecker::RemoteChecker(std::string url, std::unique_ptr<llm::HttpTransport> transport)
    : url_(std::move(url)), path_(url_path(url_)), transport_(std::move(transport)) {}

CheckerOutput RemoteChecker::parse_response(const std::string& body) {
  CheckerOutput out;
  try {
    auto j = json::parse(body);
    out.score = j.at("score").get<double>();
    out.range = {j.at("v_min").get<double>(), j.at("v_max").get<double>()};
  } catch (const json::exception& e) {
    throw BackendError(std::string("remote checker: malformed response: ") + e.what());
  }
  if (!(out.range.min < out.range.max)) throw BackendError("remote checker: v_min must be below v_max");
  if (out.score < out.range.min || out.score > out.range.max)
    throw BackendError("remote checker: score " + std::to_string(out.score) + " outside its declared range");
  return out;
}

CheckerOutput RemoteChecker::score(std::string_view chunk, std::string_view claim) {
  json body = {{"doc", chunk}, {"claim", claim}};
  auto res = transport_->post(path_, {}, body.dump(), "application/json");
  if (res.status >= 500) throw TransientError("remote checker returned HTTP " + std::to_string(res.status));
  if (res.status != 200) throw BackendError("remote checker returned HTTP " + std::to_string(res.status));
  return parse_response(res.body);
}

// ---------------------------------------------------------------- llm

LlmChecker::LlmChecker(llm::Gateway& gateway, std::string model) : gateway_(gateway), model_(std::move(model)) {}

CheckerOutput LlmChecker::score(std::string_view chunk, std::string_view claim) {
  llm::LlmRequest req;
  req.template_name = llm::templates::zero_shot_eval;
  req.bindings = {{"DOCUMENT", std::string(chunk)}, {"CLAIM", std::string(claim)}};
  req.model_tag = model_;
  return {llm::parse_yes_no(gateway_.complete(req)) ? 1.0 : 0.0, {0.0, 1.0}};
}

// ---------------------------------------------------------------- scoring

CheckerOutput score_claim(Checker& checker, std::span<const EvidenceDoc> evidence, std::string_view claim,
                          const ChunkPlan& plan, const text::SentenceSplitter& splitter) {
  if (evidence.empty()) throw UsageError("score_claim needs at least one evidence document");
  std::optional<CheckerOutput> best;
  for (const auto& doc : evidence) {
    for (const auto& c : chunk(doc.text, plan, splitter)) {
      auto out = checker.score(c, claim);
      if (best && !(out.range == best->range)) throw BackendError("checker changed its declared range mid-claim");
      if (!best || out.score > best->score) best = out;
    }
  }
  if (!best) throw DataError("no scorable text in the evidence documents");
  return *best;
}

double ThresholdPolicy::resolve(const ScoreRange& range) const {
  switch (mode) {
    case ThresholdMode::midpoint: return range.midpoint();
    case ThresholdMode::fixed:
      if (!value) throw UsageError("fixed threshold policy without a value");
      return *value;
    case ThresholdMode::tuned:
      if (!value) throw UsageError("tuned threshold policy has no stored threshold; run `tune` first");
      return *value;
  }
  throw UsageError("bad threshold mode");
}

std::string ThresholdPolicy::to_string() const {
  switch (mode) {
    case ThresholdMode::midpoint: return "midpoint";
    case ThresholdMode::fixed: return "fixed:" + json(value.value_or(0.5)).dump();
    case ThresholdMode::tuned: return "tuned";
  }
  return "?";
}

SupportLabel decide(const CheckerOutput& output, const ThresholdPolicy& policy) {
  return label_from_bool(output.score > policy.resolve(output.range));
}

DecomposedDecision decide_facts(Checker& checker, std::span<const EvidenceDoc> evidence,
                                std::span<const decomp::AtomicFact> facts, const ChunkPlan& plan,
                                const ThresholdPolicy& policy) {
  if (facts.empty()) throw UsageError("no atomic facts to decide");
  DecomposedDecision d;
  d.facts.assign(facts.begin(), facts.end());
  bool all = true;
  for (const auto& f : facts) {
    auto label = decide(score_claim(checker, evidence, f.text, plan), policy);
    d.fact_labels.push_back(label);
    all = all && is_supported(label);
  }
  d.label = label_from_bool(all);
  return d;
}

SupportLabel check_decomposed(Checker& checker, llm::Gateway& gateway, std::span<const EvidenceDoc> evidence,
                              std::string_view claim, const ChunkPlan& plan, const ThresholdPolicy& policy) {
  auto facts = decomp::decompose(gateway, claim);
  return decide_facts(checker, evidence, facts, plan, policy).label;
}

std::vector<SupportLabel> parse_batch_response(std::string_view completion, std::size_t claim_count) {
  json j;
  try {
    j = json::parse(text::extract_json_object(completion));
  } catch (const std::exception&) {
    throw DataError("multi-claim: malformed JSON: " + std::string(completion));
  }
  if (!j.is_object()) throw DataError("multi-claim: expected a JSON object");
  std::vector<SupportLabel> out;
  for (std::size_t i = 1; i <= claim_count; ++i) {
    auto key = "[" + std::to_string(i) + "]";
    if (!j.contains(key)) throw DataError("multi-claim: missing verdict for " + key);
    const auto& v = j[key];
    if (v.is_boolean())
      out.push_back(label_from_bool(v.get<bool>()));
    else if (v.is_string())
      out.push_back(label_from_bool(llm::parse_yes_no(v.get<std::string>())));
    else
      throw DataError("multi-claim: verdict for " + key + " is not yes/no");
  }
  if (j.size() != claim_count)
    throw DataError("multi-claim: expected " + std::to_string(claim_count) + " verdicts, got " + std::to_string(j.size()));
  return out;
}

std::vector<SupportLabel> check_batch_llm(llm::Gateway& gateway, std::string_view document,
                                          std::span<const std::string> claims) {
  if (claims.empty()) throw UsageError("multi-claim check needs at least one claim");
  std::string listed;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (i) listed += '\n';
    listed += "[" + std::to_string(i + 1) + "] " + claims[i];
  }
  llm::LlmRequest req;
  req.template_name = llm::templates::multi_claim_eval;
  req.bindings = {{"DOCUMENT", std::string(document)}, {"CLAIMS", listed}};
  return parse_batch_response(gateway.complete(req), claims.size());
}

std::unique_ptr<Checker> make_checker(std::string_view spec, llm::Gateway* gateway) {
  if (spec == "stub") return std::make_unique<LexicalStub>();
  if (spec.rfind("remote:", 0) == 0) {
    std::string url(spec.substr(7));
    return std::make_unique<RemoteChecker>(url, llm::make_http_transport(url_origin(url)));
  }
  if (spec.rfind("llm:", 0) == 0) {
    if (!gateway) throw UsageError("llm checker needs a configured gateway");
    auto model = std::string(spec.substr(4));
    if (model.empty()) throw UsageError("llm checker needs a model name");
    return std::make_unique<LlmChecker>(*gateway, model);
  }
  throw UsageError("unknown checker '" + std::string(spec) + "' (expected stub, remote:URL or llm:MODEL)");
}

ChunkPlan default_plan_for(std::string_view checker_spec) {
  if (text::to_lower(checker_spec).find("alignscore") != std::string::npos) return {ChunkStrategy::whitespace, 350};
  return {};
}

}  // namespace factcheck::checker

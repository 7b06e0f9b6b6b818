#include "factcheck/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "factcheck/digest.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/records.hpp"
#include "factcheck/text.hpp"

namespace factcheck::llm {

using nlohmann::json;

std::string bindings_digest(const Bindings& bindings) {
  return sha256_hex(json(bindings).dump()).substr(0, 16);
}

// ---------------------------------------------------------------- mock

std::string MockBackend::key(std::string_view template_name, std::string_view digest) {
  std::string k(template_name);
  k += '|';
  k += digest;
  return k;
}

void MockBackend::script(std::string_view template_name, const Bindings& bindings,
                         std::vector<std::string> responses) {
  script_digest(template_name, bindings_digest(bindings), std::move(responses));
}

void MockBackend::script_digest(std::string_view template_name, std::string_view digest,
                                std::vector<std::string> responses) {
  if (responses.empty()) throw UsageError("mock script for " + std::string(template_name) + " has no responses");
  std::lock_guard lock(mu_);
  auto& s = scripts_[key(template_name, digest)];
  s.responses = std::move(responses);
  s.next = 0;
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  auto mock = std::make_shared<MockBackend>();
  for (const auto& [line_no, line] : read_lines(path)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    if (!j.contains("template") || !j["template"].is_string())
      throw DataError(where() + ": missing field 'template'");
    std::vector<std::string> responses;
    if (j.contains("responses"))
      responses = j["responses"].get<std::vector<std::string>>();
    else if (j.contains("response"))
      responses.push_back(j["response"].get<std::string>());
    else
      throw DataError(where() + ": missing field 'response'");
    auto tpl = j["template"].get<std::string>();
    if (j.contains("bindings"))
      mock->script(tpl, j["bindings"].get<Bindings>(), std::move(responses));
    else if (j.contains("digest"))
      mock->script_digest(tpl, j["digest"].get<std::string>(), std::move(responses));
    else
      throw DataError(where() + ": need 'bindings' or 'digest'");
  }
  mock->source_digest_ = sha256_file(path).substr(0, 16);
  return mock;
}

std::string MockBackend::complete(const RenderedPrompt& prompt) {
  std::lock_guard lock(mu_);
  auto it = scripts_.find(key(prompt.template_name, prompt.bindings_digest));
  if (it == scripts_.end())
    throw FixtureMissing("no mock fixture for template '" + prompt.template_name + "' digest " +
                         prompt.bindings_digest);
  auto& s = it->second;
  ++s.hits;
  const auto& out = s.responses[std::min(s.next, s.responses.size() - 1)];
  if (s.next < s.responses.size()) ++s.next;
  return out;
}

std::string MockBackend::identity() const { return "mock:" + source_digest_; }

std::size_t MockBackend::hits(std::string_view template_name, const Bindings& bindings) const {
  std::lock_guard lock(mu_);
  auto it = scripts_.find(key(template_name, bindings_digest(bindings)));
  return it == scripts_.end() ? 0 : it->second.hits;
}

// ---------------------------------------------------------------- http

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // "" or "/v1"
};

SplitUrl split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw UsageError("base URL needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) {
    auto parts = split_url(base_url);
    prefix_ = parts.path;
    client_ = std::make_unique<httplib::Client>(parts.origin);
    client_->set_connection_timeout(std::chrono::seconds(10));
    client_->set_read_timeout(timeout);
    client_->set_write_timeout(timeout);
  }

  HttpResponse post(const std::string& path, const std::multimap<std::string, std::string>& headers,
                    const std::string& body, const std::string& content_type) override {
    httplib::Headers h(headers.begin(), headers.end());
    std::lock_guard lock(mu_);
    auto res = client_->Post(prefix_ + path, h, body, content_type);
    if (!res) throw TransientError("HTTP POST " + prefix_ + path + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  std::mutex mu_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

ChatCompletionsBackend::ChatCompletionsBackend(std::string base_url, std::string api_key,
                                               std::unique_ptr<HttpTransport> transport)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), transport_(std::move(transport)) {}

json ChatCompletionsBackend::request_body(const RenderedPrompt& prompt) {
  return {{"model", prompt.model},
          {"messages", json::array({{{"role", "user"}, {"content", prompt.text}}})},
          {"temperature", prompt.temperature}};
}

std::string ChatCompletionsBackend::parse_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed chat-completions response: ") + e.what());
  }
}

std::string ChatCompletionsBackend::complete(const RenderedPrompt& prompt) {
  std::multimap<std::string, std::string> headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = transport_->post("/chat/completions", headers, request_body(prompt).dump(), "application/json");
  if (res.status >= 500) throw TransientError("chat-completions returned HTTP " + std::to_string(res.status));
  if (res.status != 200)
    throw BackendError("chat-completions returned HTTP " + std::to_string(res.status) + ": " +
                       res.body.substr(0, 200));
  return parse_response(res.body);
}

// ---------------------------------------------------------------- cost

void CostLedger::record(const std::string& model, std::size_t prompt_tokens, std::size_t completion_tokens) {
  std::lock_guard lock(mu_);
  auto& c = counters_[model];
  c.prompt_tokens += prompt_tokens;
  c.completion_tokens += completion_tokens;
  ++c.calls;
}

std::map<std::string, UsageCounters> CostLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return counters_;
}

CostEstimate estimate_cost(const std::map<std::string, UsageCounters>& usage, const PriceTable& prices) {
  CostEstimate out;
  for (const auto& [model, c] : usage) {
    auto it = prices.find(model);
    if (it == prices.end()) throw UsageError("no price configured for model '" + model + "'");
    double cost = static_cast<double>(c.prompt_tokens) / 1000.0 * it->second.per_1k_prompt +
                  static_cast<double>(c.completion_tokens) / 1000.0 * it->second.per_1k_completion;
    out.per_model[model] = cost;
    out.total += cost;
  }
  return out;
}

json to_json(const std::map<std::string, UsageCounters>& usage) {
  json j = json::object();
  for (const auto& [model, c] : usage)
    j[model] = {{"prompt_tokens", c.prompt_tokens}, {"completion_tokens", c.completion_tokens}, {"calls", c.calls}};
  return j;
}

// ---------------------------------------------------------------- gateway

std::map<std::string, std::string> default_routing() {
  const std::string gpt35 = "gpt-3.5-turbo-0125";
  const std::string gpt4 = "gpt-4-0125-preview";
  std::map<std::string, std::string> r;
  for (const auto& t : all_templates()) r[std::string(t.name)] = gpt4;
  r[std::string(templates::sentence_decomposition)] = gpt35;
  r[std::string(templates::merge_facts)] = gpt35;
  return r;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (!backend_) throw UsageError("gateway needs a backend");
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
  if (config_.retry.max_attempts < 1) config_.retry.max_attempts = 1;
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string Gateway::model_for(std::string_view template_name) const {
  auto it = config_.routing.find(std::string(template_name));
  return it == config_.routing.end() ? config_.fallback_model : it->second;
}

RenderedPrompt Gateway::render(const LlmRequest& req) const {
  const auto& tpl = find_template(req.template_name);
  RenderedPrompt p;
  p.template_name = req.template_name;
  p.model = req.model_tag.empty() ? model_for(req.template_name) : req.model_tag;
  p.text = llm::render(tpl, req.bindings);
  p.temperature = req.temperature;
  p.bindings_digest = bindings_digest(req.bindings);
  return p;
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

Completion Gateway::complete_ex(const LlmRequest& req) {
  auto prompt = render(req);
  {
    std::unique_lock lock(mu_);
    slot_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
    ++stats_.requests;
  }
  struct SlotGuard {
    Gateway* g;
    ~SlotGuard() {
      {
        std::lock_guard lock(g->mu_);
        --g->in_flight_;
      }
      g->slot_cv_.notify_one();
    }
  } guard{this};

  auto delay = config_.retry.base_delay;
  for (int attempt = 1;; ++attempt) {
    {
      std::lock_guard lock(mu_);
      ++stats_.attempts;
    }
    try {
      std::string text = backend_->complete(prompt);
      ledger_.record(prompt.model, text::word_count(prompt.text), text::word_count(text));
      return {std::move(text), prompt.model, attempt};
    } catch (const TransientError& e) {
      {
        std::lock_guard lock(mu_);
        ++stats_.failed_attempts;
      }
      if (attempt >= config_.retry.max_attempts) {
        spdlog::warn("{}: giving up after {} attempts: {}", prompt.template_name, attempt, e.what());
        throw;
      }
      spdlog::debug("{}: attempt {} failed ({}), retrying", prompt.template_name, attempt, e.what());
      sleeper_(delay);
      delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::llround(static_cast<double>(delay.count()) * config_.retry.multiplier)));
    } catch (const BackendError&) {
      std::lock_guard lock(mu_);
      ++stats_.failed_attempts;
      throw;
    }
  }
}

bool parse_yes_no(std::string_view completion) {
  std::vector<std::string> words;
  std::string word;
  for (char ch : completion) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      word += static_cast<char>(std::tolower(c));
    } else if (!word.empty()) {
      words.push_back(std::move(word));
      word.clear();
    }
  }
  if (!word.empty()) words.push_back(std::move(word));
  if (!words.empty() && (words.front() == "yes" || words.front() == "no")) return words.front() == "yes";
  // "Answer: no" and similar: accept when exactly one of the two words occurs.
  bool yes = std::find(words.begin(), words.end(), "yes") != words.end();
  bool no = std::find(words.begin(), words.end(), "no") != words.end();
  if (yes != no) return yes;
  throw DataError("expected a yes/no answer, got: " + std::string(completion.substr(0, 80)));
}

bool entails(Gateway& gateway, std::string_view source, std::string_view claim) {
  LlmRequest req;
  req.template_name = templates::entailment_check;
  req.bindings = {{"SOURCE", std::string(source)}, {"CLAIM", std::string(claim)}};
  return parse_yes_no(gateway.complete(req));
}

}  // namespace factcheck::llm

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "factcheck/prompts.hpp"

namespace factcheck::llm {

struct LlmRequest {
  std::string template_name;
  Bindings bindings;
  double temperature = 0.0;
  std::string model_tag;  // empty: use the routing table
};

/// A fully rendered request as handed to a backend.
struct RenderedPrompt {
  std::string template_name;
  std::string model;
  std::string text;
  double temperature = 0.0;
  std::string bindings_digest;
};

/// Stable digest of a binding map (sha256 over its canonical JSON, first 16 hex chars).
std::string bindings_digest(const Bindings& bindings);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const RenderedPrompt& prompt) = 0;
  virtual std::string identity() const = 0;
};

/// Scripted responses keyed by (template name, bindings digest).
///
/// Each key holds a response sequence consumed in order; the last response repeats once the
/// sequence is exhausted. Unscripted keys throw FixtureMissing.
///
/// Fixture file: one JSON object per line with `template`, either `bindings` (object) or
/// `digest` (string), and either `response` (string) or `responses` (list of strings).
class MockBackend : public Backend {
 public:
  MockBackend() = default;
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

  void script(std::string_view template_name, const Bindings& bindings, std::vector<std::string> responses);
  void script_digest(std::string_view template_name, std::string_view digest, std::vector<std::string> responses);

  std::string complete(const RenderedPrompt& prompt) override;
  std::string identity() const override;

  /// Number of times each key was requested.
  std::size_t hits(std::string_view template_name, const Bindings& bindings) const;

 private:
  struct Script {
    std::vector<std::string> responses;
    std::size_t next = 0;
    std::size_t hits = 0;
  };
  static std::string key(std::string_view template_name, std::string_view digest);

  mutable std::mutex mu_;
  std::map<std::string, Script> scripts_;
  std::string source_digest_ = "inline";
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Minimal POST transport so the chat-completions backend can be tested without a network.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws TransientError on connection-level failures.
  virtual HttpResponse post(const std::string& path, const std::multimap<std::string, std::string>& headers,
                            const std::string& body, const std::string& content_type) = 0;
};

/// cpp-httplib transport for a base URL such as "https://api.openai.com/v1".
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout = std::chrono::seconds(120));

/// Speaks the chat-completions wire protocol: POST {base}/chat/completions with
/// {model, messages, temperature}; reads choices[0].message.content.
class ChatCompletionsBackend : public Backend {
 public:
  ChatCompletionsBackend(std::string base_url, std::string api_key, std::unique_ptr<HttpTransport> transport);

  std::string complete(const RenderedPrompt& prompt) override;
  std::string identity() const override { return "chat-completions:" + base_url_; }

  /// Request body for a rendered prompt; exposed for wire-format tests.
  static nlohmann::json request_body(const RenderedPrompt& prompt);
  /// Throws BackendError when the body lacks choices[0].message.content.
  static std::string parse_response(const std::string& body);

 private:
  std::string base_url_;
  std::string api_key_;
  std::unique_ptr<HttpTransport> transport_;
  std::string path_prefix_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
};

struct ModelPrice {
  double per_1k_prompt = 0.0;
  double per_1k_completion = 0.0;
};
using PriceTable = std::map<std::string, ModelPrice>;

struct UsageCounters {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::size_t calls = 0;
};

/// Per-model token counters. Token counts are whitespace-token estimates, not tokenizer counts.
class CostLedger {
 public:
  void record(const std::string& model, std::size_t prompt_tokens, std::size_t completion_tokens);
  std::map<std::string, UsageCounters> snapshot() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, UsageCounters> counters_;
};

struct CostEstimate {
  std::map<std::string, double> per_model;
  double total = 0.0;
};

/// Σ_model prompt/1000·p_in + completion/1000·p_out. Throws UsageError for an unpriced model.
CostEstimate estimate_cost(const std::map<std::string, UsageCounters>& usage, const PriceTable& prices);

nlohmann::json to_json(const std::map<std::string, UsageCounters>& usage);

/// Template→model routing: GPT-3.5 for decomposition and merging, GPT-4 for everything else.
std::map<std::string, std::string> default_routing();

struct GatewayConfig {
  std::map<std::string, std::string> routing = default_routing();
  std::string fallback_model = "gpt-4-0125-preview";
  RetryPolicy retry;
  std::size_t max_in_flight = 8;
  PriceTable prices;
};

struct GatewayStats {
  std::size_t requests = 0;
  std::size_t attempts = 0;
  std::size_t failed_attempts = 0;
};

struct Completion {
  std::string text;
  std::string model;
  int attempts = 0;
};

/// Provider-agnostic entry point for every LLM call made by the pipelines and checkers.
///
/// Thread-safe. At most `max_in_flight` backend calls run concurrently; retries apply to
/// TransientError only, with exponential backoff.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {});

  std::string complete(const LlmRequest& req) { return complete_ex(req).text; }
  Completion complete_ex(const LlmRequest& req);

  /// Renders without dispatching; throws UsageError on unbound placeholders.
  RenderedPrompt render(const LlmRequest& req) const;

  std::string model_for(std::string_view template_name) const;
  const CostLedger& ledger() const { return ledger_; }
  GatewayStats stats() const;
  std::string backend_identity() const { return backend_->identity(); }
  const GatewayConfig& config() const { return config_; }

  void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

 private:
  std::shared_ptr<Backend> backend_;
  GatewayConfig config_;
  CostLedger ledger_;
  Sleeper sleeper_;

  mutable std::mutex mu_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
  GatewayStats stats_;
};

/// Parses a yes/no completion: the leading word, else the only one of yes/no present.
/// Case-insensitive. Throws DataError otherwise.
bool parse_yes_no(std::string_view completion);

/// Runs the entailment-check prompt: is `claim` entailed by `source`?
bool entails(Gateway& gateway, std::string_view source, std::string_view claim);

}  // namespace factcheck::llm

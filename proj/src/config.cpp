#include "factcheck/config.hpp"

#include <cstdlib>

#include <spdlog/spdlog.h>

#include "factcheck/digest.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/records.hpp"

namespace factcheck {

using nlohmann::json;

ToolkitConfig ToolkitConfig::from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  ToolkitConfig c;
  try {
    if (j.contains("base_url")) c.base_url = j["base_url"].get<std::string>();
    if (j.contains("api_key_env")) c.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("mock_fixtures")) c.mock_fixtures = j["mock_fixtures"].get<std::string>();
    if (j.contains("max_in_flight")) c.gateway.max_in_flight = j["max_in_flight"].get<std::size_t>();
    if (j.contains("retry")) {
      const auto& r = j["retry"];
      if (r.contains("attempts")) c.gateway.retry.max_attempts = r["attempts"].get<int>();
      if (r.contains("base_delay_ms")) c.gateway.retry.base_delay = std::chrono::milliseconds(r["base_delay_ms"].get<long>());
      if (r.contains("multiplier")) c.gateway.retry.multiplier = r["multiplier"].get<double>();
    }
    if (j.contains("routing"))
      for (const auto& [tpl, model] : j["routing"].items()) {
        llm::find_template(tpl);
        c.gateway.routing[tpl] = model.get<std::string>();
      }
    if (j.contains("prices"))
      for (const auto& [model, p] : j["prices"].items())
        c.gateway.prices[model] = {p.at("prompt").get<double>(), p.at("completion").get<double>()};
    if (j.contains("chunk_plans"))
      for (const auto& [spec, plan] : j["chunk_plans"].items()) {
        checker::ChunkPlan::parse(plan.get<std::string>());
        c.chunk_plans[spec] = plan.get<std::string>();
      }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (c.gateway.max_in_flight == 0) throw UsageError("config: max_in_flight must be positive");
  if (c.gateway.retry.max_attempts < 1) throw UsageError("config: retry.attempts must be >= 1");
  return c;
}

ToolkitConfig ToolkitConfig::load(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  auto c = from_json(j);
  if (c.mock_fixtures && c.mock_fixtures->is_relative()) c.mock_fixtures = path.parent_path() / *c.mock_fixtures;
  c.digest = sha256_hex(bytes);
  return c;
}

checker::ChunkPlan ToolkitConfig::plan_for(const std::string& checker_spec) const {
  auto it = chunk_plans.find(checker_spec);
  if (it != chunk_plans.end()) return checker::ChunkPlan::parse(it->second);
  return checker::default_plan_for(checker_spec);
}

std::unique_ptr<llm::Gateway> make_gateway(const ToolkitConfig& config) {
  if (config.mock_fixtures)
    return std::make_unique<llm::Gateway>(llm::MockBackend::from_file(*config.mock_fixtures), config.gateway);
  if (config.base_url.empty()) throw UsageError("no LLM backend configured: set base_url or mock_fixtures in --config");
  std::string key;
  if (const char* v = std::getenv(config.api_key_env.c_str())) key = v;
  if (key.empty()) spdlog::warn("environment variable {} is not set; sending requests without a key", config.api_key_env);
  auto backend = std::make_shared<llm::ChatCompletionsBackend>(config.base_url, key,
                                                               llm::make_http_transport(config.base_url));
  return std::make_unique<llm::Gateway>(backend, config.gateway);
}

}  // namespace factcheck

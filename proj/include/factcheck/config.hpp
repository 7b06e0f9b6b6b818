#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "factcheck/checker.hpp"
#include "factcheck/gateway.hpp"

namespace factcheck {

/// Toolkit configuration (JSON object). Every key is optional:
///
///   base_url          chat-completions endpoint, e.g. "https://api.openai.com/v1"
///   api_key_env       environment variable holding the API key (default OPENAI_API_KEY)
///   mock_fixtures     path to a mock fixture file; selects the mock backend
///   max_in_flight     concurrent LLM calls (default 8)
///   retry             {"attempts": 3, "base_delay_ms": 500, "multiplier": 2}
///   routing           {"<template>": "<model>"} overrides
///   prices            {"<model>": {"prompt": <per 1K>, "completion": <per 1K>}}
///   chunk_plans       {"<checker spec>": "whitespace:350"} overrides
struct ToolkitConfig {
  std::string base_url;
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<std::filesystem::path> mock_fixtures;
  llm::GatewayConfig gateway;
  std::map<std::string, std::string> chunk_plans;
  std::string digest = "none";  // sha256 of the config file bytes

  static ToolkitConfig load(const std::filesystem::path& path);
  static ToolkitConfig from_json(const nlohmann::json& j);

  checker::ChunkPlan plan_for(const std::string& checker_spec) const;
};

/// Builds the gateway selected by the config: the mock backend when fixtures are configured,
/// otherwise the chat-completions backend (which requires base_url).
std::unique_ptr<llm::Gateway> make_gateway(const ToolkitConfig& config);

}  // namespace factcheck

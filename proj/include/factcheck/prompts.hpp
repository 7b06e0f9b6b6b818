#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace factcheck::llm {

using Bindings = std::map<std::string, std::string>;

/// A named prompt body with `{{NAME}}` placeholders.
struct PromptTemplate {
  std::string_view name;
  std::string_view body;
};

namespace templates {
inline constexpr std::string_view sentence_decomposition = "sentence-decomposition";
inline constexpr std::string_view atomic_expansion = "atomic-expansion";
inline constexpr std::string_view passage_gen = "passage-gen";
inline constexpr std::string_view entailment_check = "entailment-check";
inline constexpr std::string_view chunk_summarization = "chunk-summarization";
inline constexpr std::string_view merge_facts = "merge-facts";
inline constexpr std::string_view zero_shot_eval = "zero-shot-eval";
inline constexpr std::string_view decontextualize = "decontextualize";
inline constexpr std::string_view c2d_simp_support = "c2d-simp-support";
inline constexpr std::string_view c2d_simp_nonsupport = "c2d-simp-nonsupport";
inline constexpr std::string_view d2c_simp_edit = "d2c-simp-edit";
inline constexpr std::string_view multi_claim_eval = "multi-claim-eval";
}  // namespace templates

const std::vector<PromptTemplate>& all_templates();

/// Throws UsageError for an unknown name.
const PromptTemplate& find_template(std::string_view name);

/// Placeholder names appearing in a body, in first-occurrence order.
std::vector<std::string> placeholders(const PromptTemplate& tpl);

/// Substitutes every placeholder. Throws UsageError naming the first unbound placeholder.
std::string render(const PromptTemplate& tpl, const Bindings& bindings);

/// "-fact1\n-fact2\n..." as used by the passage-generation and merge prompts.
std::string bullet_list(const std::vector<std::string>& items);

}  // namespace factcheck::llm

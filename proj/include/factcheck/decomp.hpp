#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factcheck/gateway.hpp"

namespace factcheck::decomp {

struct AtomicFact {
  std::string text;
  std::size_t index = 0;
};

/// Non-empty set of 0-based fact indices, kept sorted.
struct FactSubset {
  std::vector<std::size_t> members;

  bool contains(std::size_t i) const;
  bool operator==(const FactSubset&) const = default;
};

inline constexpr std::size_t kDefaultAtomCap = 8;

/// Parses a "- fact" bullet list. Accepts '-', '–' and '•' prefixes; any other non-empty
/// line, or zero bullets, is a DataError carrying the raw completion.
std::vector<AtomicFact> parse_fact_bullets(std::string_view completion);

std::vector<AtomicFact> decompose(llm::Gateway& gateway, std::string_view claim);

/// All 2^n - 1 non-empty subsets ordered by size, then lexicographically.
/// Throws DataError when n exceeds `cap` or n == 0.
std::vector<FactSubset> power_set(std::size_t fact_count, std::size_t cap = kDefaultAtomCap);
inline std::vector<FactSubset> power_set(std::span<const AtomicFact> facts, std::size_t cap = kDefaultAtomCap) {
  return power_set(facts.size(), cap);
}

/// Singletons return the fact verbatim; larger subsets go through the merge prompt and must
/// come back as exactly one sentence.
std::string merge(llm::Gateway& gateway, const FactSubset& subset, std::span<const AtomicFact> facts);

struct Decontextualized {
  bool changed = false;
  std::string text;
};

Decontextualized parse_decontext_response(std::string_view completion, std::string_view claim);
Decontextualized decontextualize(llm::Gateway& gateway, std::string_view claim,
                                 std::span<const std::string> context);

}  // namespace factcheck::decomp

#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace factcheck::text {

std::vector<std::string_view> whitespace_tokens(std::string_view s);
std::size_t word_count(std::string_view s);
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Rule-based segmentation on terminal punctuation with an abbreviation list.
std::vector<std::string> split_sentences(std::string_view text);

/// Pluggable segmentation boundary; fixtures may substitute pre-split sentences.
using SentenceSplitter = std::function<std::vector<std::string>(std::string_view)>;
inline SentenceSplitter default_splitter() { return [](std::string_view t) { return split_sentences(t); }; }

/// Appends a period when the sentence lacks terminal punctuation.
std::string ensure_terminal(std::string_view sentence);

/// Strips a surrounding ```...``` fence and returns the outermost {...} object text.
std::string extract_json_object(std::string_view completion);

}  // namespace factcheck::text

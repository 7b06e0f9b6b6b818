#include "factcheck/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "factcheck/errors.hpp"

namespace factcheck::text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::vector<std::string_view> whitespace_tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::size_t word_count(std::string_view s) { return whitespace_tokens(s).size(); }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  return to_lower(s.substr(0, prefix.size())) == to_lower(prefix);
}

namespace {

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> abbrevs = {
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "u.s", "u.k", "u.n",
      "inc", "ltd", "co", "corp", "no", "fig", "gen", "gov", "sen", "rep", "lt", "col", "sgt", "capt",
      "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "approx", "dept",
      "est", "mt", "ft", "a.m", "p.m", "vol", "ed", "al"};
  return abbrevs;
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// The word ending at position `dot` (exclusive), lowercased, without surrounding punctuation.
std::string word_before(std::string_view s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(s[b - 1])) --b;
  std::string w = to_lower(s.substr(b, dot - b));
  while (!w.empty() && (w.front() == '(' || w.front() == '"' || w.front() == '\'')) w.erase(w.begin());
  return w;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  auto flush = [&](std::size_t end) {
    auto sent = trim(s.substr(start, end - start));
    if (!sent.empty()) out.push_back(std::move(sent));
    start = end;
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t end = i + 1;
      while (end < s.size() && (s[end] == '.' || s[end] == '!' || s[end] == '?')) ++end;
      while (end < s.size() && is_closer(s[end])) ++end;
      if (end < s.size() && !is_space(s[end])) {
        i = end;
        continue;
      }
      if (c == '.' && end == i + 1) {
        std::string w = word_before(s, i);
        bool initial = w.size() == 1 && std::isalpha(static_cast<unsigned char>(w[0]));
        if (abbreviations().count(w) || initial) {
          i = end;
          continue;
        }
      }
      // A following lowercase word means the punctuation did not end the sentence.
      std::size_t next = end;
      while (next < s.size() && is_space(s[next])) ++next;
      if (next < s.size() && std::islower(static_cast<unsigned char>(s[next]))) {
        i = end;
        continue;
      }
      flush(end);
      i = end;
      continue;
    }
    ++i;
  }
  flush(s.size());
  return out;
}

std::string ensure_terminal(std::string_view sentence) {
  std::string s = trim(sentence);
  if (s.empty()) return s;
  char last = s.back();
  std::size_t k = s.size();
  while (k > 0 && is_closer(s[k - 1])) --k;
  if (k > 0) last = s[k - 1];
  if (last != '.' && last != '!' && last != '?') s += '.';
  return s;
}

std::string extract_json_object(std::string_view completion) {
  auto b = completion.find('{');
  auto e = completion.rfind('}');
  if (b == std::string_view::npos || e == std::string_view::npos || e < b)
    throw DataError("no JSON object in completion: " + std::string(completion));
  return std::string(completion.substr(b, e - b + 1));
}

}  // namespace factcheck::text

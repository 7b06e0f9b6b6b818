#include "factcheck/records.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "factcheck/errors.hpp"

namespace factcheck {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.emplace_back(n, std::move(line));
  }
  return out;
}

namespace {

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

const nlohmann::json& field(const nlohmann::json& j, const char* name, std::size_t line_no) {
  auto it = j.find(name);
  if (it == j.end()) throw DataError(where(line_no) + "missing field '" + name + "'");
  return *it;
}

std::string string_field(const nlohmann::json& j, const char* name, std::size_t line_no) {
  const auto& v = field(j, name, line_no);
  if (!v.is_string()) throw DataError(where(line_no) + "field '" + name + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* name, std::size_t line_no) {
  const auto& v = field(j, name, line_no);
  if (!v.is_array()) throw DataError(where(line_no) + "field '" + name + "' must be a list");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw DataError(where(line_no) + "field '" + name + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

BenchRecord parse_bench_record(std::string_view line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where(line_no) + "invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw DataError(where(line_no) + "record must be a JSON object");

  BenchRecord r;
  r.grounded.id = string_field(j, "id", line_no);
  r.dataset = string_field(j, "dataset", line_no);
  r.grounded.query_group = string_field(j, "query_group", line_no);
  r.grounded.text = string_field(j, "claim", line_no);
  r.grounded.context = string_list(j, "context", line_no);
  auto docs = string_list(j, "docs", line_no);
  r.raw_label = string_field(j, "raw_label", line_no);

  if (r.grounded.text.empty()) throw DataError(where(line_no) + "empty claim");
  if (docs.empty()) throw DataError(where(line_no) + "benchmark records need at least one document");
  for (std::size_t k = 0; k < docs.size(); ++k) {
    if (docs[k].empty()) throw DataError(where(line_no) + "document " + std::to_string(k) + " is empty");
    r.grounded.evidence.push_back({r.grounded.id + "#" + std::to_string(k), std::move(docs[k])});
  }
  try {
    r.gold = unify_label(r.raw_label, r.dataset);
  } catch (const DataError& e) {
    throw DataError(where(line_no) + e.what());
  }
  if (j.contains("label")) {
    int stored = j.at("label").get<int>();
    if (stored != to_int(r.gold))
      throw DataError(where(line_no) + "label " + std::to_string(stored) + " disagrees with raw_label '" +
                      r.raw_label + "'");
  }
  if (j.contains("split")) r.split = parse_split(j.at("split").get<std::string>());
  return r;
}

nlohmann::json to_json(const BenchRecord& r) {
  nlohmann::json j;
  j["id"] = r.grounded.id;
  j["dataset"] = r.dataset;
  j["query_group"] = r.grounded.query_group;
  j["claim"] = r.grounded.text;
  j["context"] = r.grounded.context;
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : r.grounded.evidence) docs.push_back(d.text);
  j["docs"] = docs;
  j["raw_label"] = r.raw_label;
  j["label"] = to_int(r.gold);
  if (r.split) j["split"] = to_string(*r.split);
  return j;
}

std::vector<BenchRecord> read_bench_file(const std::filesystem::path& path) {
  std::vector<BenchRecord> out;
  for (auto& [n, line] : read_lines(path)) {
    try {
      out.push_back(parse_bench_record(line, n));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_bench_file(const std::filesystem::path& path, const std::vector<BenchRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  write_file(path, out);
}

std::vector<SynthTuple> read_tuples(const std::filesystem::path& path) {
  std::vector<SynthTuple> out;
  for (auto& [n, line] : read_lines(path)) {
    try {
      out.push_back(synth_tuple_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_tuples(const std::filesystem::path& path, const std::vector<SynthTuple>& tuples) {
  std::string out;
  for (const auto& t : tuples) out += to_json(t).dump() + "\n";
  write_file(path, out);
}

}  // namespace factcheck

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "factcheck/core.hpp"

namespace factcheck {

/// Parses one benchmark line.
///
/// Required fields: id, dataset, query_group, claim, context (list), docs (list of strings),
/// raw_label. Normalized files additionally carry `label` (0/1) and optionally `split`;
/// when `label` is present it must agree with unify_label(raw_label).
/// `line_no` is 1-based and appears in every error message.
BenchRecord parse_bench_record(std::string_view line, std::size_t line_no);

nlohmann::json to_json(const BenchRecord& r);

std::vector<BenchRecord> read_bench_file(const std::filesystem::path& path);
void write_bench_file(const std::filesystem::path& path, const std::vector<BenchRecord>& records);

std::vector<SynthTuple> read_tuples(const std::filesystem::path& path);
void write_tuples(const std::filesystem::path& path, const std::vector<SynthTuple>& tuples);

/// Reads a file into lines, dropping a trailing '\r' and blank lines but keeping line numbers.
std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace factcheck

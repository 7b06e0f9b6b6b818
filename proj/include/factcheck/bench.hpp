#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/checker.hpp"
#include "factcheck/core.hpp"
#include "factcheck/gateway.hpp"
#include "factcheck/metrics.hpp"

namespace factcheck::bench {

/// Dataset order of the human-readable results table.
const std::vector<std::string>& canonical_dataset_order();

/// Datasets present in `names`, canonical ones first, the rest alphabetically.
std::vector<std::string> ordered_datasets(const std::vector<std::string>& names);

struct DatasetStats {
  std::string dataset;
  std::size_t size = 0;
  double mean_doc_words = 0.0;
  double mean_claim_words = 0.0;
  double negative_fraction = 0.0;
};

std::vector<DatasetStats> dataset_stats(const std::vector<BenchRecord>& records);
std::string format_stats_table(const std::vector<DatasetStats>& stats);

/// Reads raw ingestion files; `dataset_override` replaces each record's dataset field when set.
std::vector<BenchRecord> ingest(const std::vector<std::filesystem::path>& inputs,
                                const std::optional<std::string>& dataset_override);

/// Splits each dataset independently.
std::vector<BenchRecord> split_by_dataset(std::vector<BenchRecord> records, std::uint64_t seed, double fraction);

struct Prediction {
  std::string id;
  std::string dataset;
  double score = 0.0;
  SupportLabel predicted = SupportLabel::unsupported;
  SupportLabel gold = SupportLabel::unsupported;
  std::optional<SupportLabel> plain;  // undecomposed / original-claim prediction
  bool claim_changed = false;
};

struct ThresholdFile {
  std::string checker;
  std::string plan;
  std::map<std::string, metrics::TunedThreshold> thresholds;
  std::map<std::string, double> midpoint_bacc;

  nlohmann::json to_json() const;
  static ThresholdFile from_json(const nlohmann::json& j);
  static ThresholdFile load(const std::filesystem::path& path);
};

struct ScoreOptions {
  checker::ChunkPlan plan;
  std::size_t workers = 1;
};

/// Scores every record; results are returned in input order.
std::vector<checker::CheckerOutput> score_records(checker::Checker& checker, const std::vector<BenchRecord>& records,
                                                  const ScoreOptions& options);

/// Per-dataset threshold tuning on the validation split.
ThresholdFile run_tune(checker::Checker& checker, const std::vector<BenchRecord>& records,
                       const ScoreOptions& options);

struct EvalOptions {
  checker::ChunkPlan plan;
  checker::ThresholdPolicy policy = checker::ThresholdPolicy::fixed(0.5);
  std::optional<ThresholdFile> thresholds;  // required for tuned policy
  std::size_t workers = 1;
  bool decompose = false;
  bool decontextualize = false;
  Split split = Split::test;
  std::optional<std::vector<Prediction>> champion;
  std::string champion_name;
  std::size_t bootstrap_runs = 1000;
  std::uint64_t seed = 0;
};

struct DatasetResult {
  std::string dataset;
  std::size_t n = 0;
  metrics::ConfusionCounts counts;
  double bacc = 0.0;
  double threshold = 0.0;
  std::optional<double> plain_bacc;
  std::optional<double> changed_fraction;
  std::optional<metrics::BootstrapResult> bootstrap;
};

struct EvalReport {
  std::string checker;
  std::string plan;
  std::string policy;
  std::vector<DatasetResult> datasets;
  double average = 0.0;
  std::optional<double> plain_average;
  std::string champion;
  nlohmann::json cost = nlohmann::json::object();
  std::vector<Prediction> predictions;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// `gateway` is needed only for decompose/decontextualize runs. Any record-level checker error
/// aborts with the record id in the message.
EvalReport run_eval(checker::Checker& checker, llm::Gateway* gateway, const std::vector<BenchRecord>& records,
                    const EvalOptions& options);

/// One row per report, datasets as columns, plus Avg.
std::string format_results_table(const std::vector<EvalReport>& reports);

std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);

/// One manifest per artifact-producing command.
struct RunManifest {
  std::vector<std::string> command;
  std::string config_digest = "none";
  std::map<std::string, std::uint64_t> seeds;
  std::string backend;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> outputs;  // path -> sha256
  std::map<std::string, std::string> inputs;   // path -> sha256

  void add_output(const std::filesystem::path& p);
  void add_input(const std::filesystem::path& p);
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string utc_timestamp();

/// `<file>.manifest.json` next to the primary output.
std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output);

}  // namespace factcheck::bench

// factcheck: synthesis pipelines, benchmark evaluation and the annotation service.

#include <algorithm>
#include <csignal>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "factcheck/annotate.hpp"
#include "factcheck/bench.hpp"
#include "factcheck/c2d.hpp"
#include "factcheck/config.hpp"
#include "factcheck/d2c.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/parallel.hpp"
#include "factcheck/random.hpp"
#include "factcheck/records.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace factcheck;

namespace {

struct Globals {
  std::string config_path;
  std::string log_level = "info";
  std::vector<std::string> argv;
};

ToolkitConfig load_config(const Globals& g) {
  if (g.config_path.empty()) return {};
  return ToolkitConfig::load(g.config_path);
}

bench::RunManifest start_manifest(const Globals& g, const ToolkitConfig& config) {
  bench::RunManifest m;
  m.command = g.argv;
  m.config_digest = config.digest;
  m.started_at = bench::utc_timestamp();
  return m;
}

void finish_manifest(bench::RunManifest& m, const fs::path& primary) {
  m.finished_at = bench::utc_timestamp();
  m.write(bench::manifest_path_for(primary));
}

// "fixed:0.5", "midpoint", "tuned" or "tuned:DATASET".
struct PolicySpec {
  checker::ThresholdPolicy policy;
  std::optional<std::string> dataset;
};

PolicySpec parse_policy(const std::string& spec) {
  if (spec == "midpoint") return {checker::ThresholdPolicy::midpoint(), std::nullopt};
  if (spec == "tuned") return {checker::ThresholdPolicy::tuned(std::nullopt), std::nullopt};
  if (spec.rfind("tuned:", 0) == 0) return {checker::ThresholdPolicy::tuned(std::nullopt), spec.substr(6)};
  if (spec.rfind("fixed:", 0) == 0) {
    try {
      std::size_t used = 0;
      double t = std::stod(spec.substr(6), &used);
      if (used == spec.size() - 6) return {checker::ThresholdPolicy::fixed(t), std::nullopt};
    } catch (const std::exception&) {
    }
  }
  throw UsageError("policy must be fixed:T, midpoint, tuned or tuned:DATASET; got '" + spec + "'");
}

checker::ChunkPlan plan_from(const std::string& flag, const ToolkitConfig& config, const std::string& checker_spec) {
  return flag.empty() ? config.plan_for(checker_spec) : checker::ChunkPlan::parse(flag);
}

// ---------------------------------------------------------------- ingest / split

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string dataset;
  std::string out;
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
  auto config = load_config(g);
  auto m = start_manifest(g, config);
  std::optional<std::string> override_ds;
  if (!a.dataset.empty()) override_ds = a.dataset;
  std::vector<fs::path> inputs(a.inputs.begin(), a.inputs.end());
  auto records = bench::ingest(inputs, override_ds);
  write_bench_file(a.out, records);
  std::cout << bench::format_stats_table(bench::dataset_stats(records));
  for (const auto& p : inputs) m.add_input(p);
  m.add_output(a.out);
  finish_manifest(m, a.out);
  return 0;
}

struct SplitArgs {
  std::string in;
  std::string out;
  std::uint64_t seed = 0;
  double fraction = 0.5;
};

int cmd_split(const Globals& g, const SplitArgs& a) {
  auto config = load_config(g);
  auto m = start_manifest(g, config);
  m.seeds["split"] = a.seed;
  auto records = bench::split_by_dataset(read_bench_file(a.in), a.seed, a.fraction);
  write_bench_file(a.out, records);
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : records) (*r.split == Split::validation ? counts[r.dataset].first : counts[r.dataset].second)++;
  for (const auto& [ds, c] : counts) std::cout << ds << ": validation " << c.first << ", test " << c.second << '\n';
  m.add_input(a.in);
  m.add_output(a.out);
  finish_manifest(m, a.out);
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string claims;
  std::string docs;
  std::string out;
  int attempts = 3;
  std::size_t atom_cap = decomp::kDefaultAtomCap;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Claims file: JSON lines {"id", "claim"} or one plain claim per line.
std::vector<c2d::ClaimInput> read_claims(const fs::path& path) {
  std::vector<c2d::ClaimInput> out;
  for (const auto& [line_no, line] : read_lines(path)) {
    if (!line.empty() && line.front() == '{') {
      try {
        auto j = json::parse(line);
        c2d::ClaimInput c;
        c.id = j.contains("id") ? j["id"].get<std::string>() : "claim-" + std::to_string(line_no);
        c.text = j.contains("claim") ? j["claim"].get<std::string>() : j.at("text").get<std::string>();
        out.push_back(std::move(c));
      } catch (const json::exception& e) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      out.push_back({"claim-" + std::to_string(line_no), line});
    }
  }
  if (out.empty()) throw DataError(path.string() + ": no claims");
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].id == out[i - 1].id) throw DataError(path.string() + ": duplicate claim id '" + out[i].id + "'");
  return out;
}

// Docs directory: *.txt (id = file stem) and *.jsonl ({"id", "text"} or {"id", "sentences"}).
std::vector<d2c::SourceDoc> read_docs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<d2c::SourceDoc> out;
  for (const auto& f : files) {
    if (f.extension() == ".txt") {
      out.push_back(d2c::segment({f.stem().string(), read_file(f)}));
    } else if (f.extension() == ".jsonl") {
      for (const auto& [line_no, line] : read_lines(f)) {
        try {
          auto j = json::parse(line);
          auto id = j.at("id").get<std::string>();
          if (j.contains("sentences"))
            out.push_back({id, j["sentences"].get<std::vector<std::string>>()});
          else
            out.push_back(d2c::segment({id, j.at("text").get<std::string>()}));
        } catch (const json::exception& e) {
          throw DataError(f.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
      }
    }
  }
  if (out.empty()) throw DataError(dir.string() + ": no .txt or .jsonl documents");
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  return out;
}

void export_tuples(const fs::path& out, std::vector<SynthTuple> tuples, std::uint64_t seed) {
  auto order = seeded_permutation(tuples.size(), seed);
  std::vector<SynthTuple> shuffled;
  shuffled.reserve(tuples.size());
  for (auto i : order) shuffled.push_back(std::move(tuples[i]));
  write_tuples(out, shuffled);
}

int cmd_synth(const Globals& g, const std::string& which, const SynthArgs& a) {
  auto config = load_config(g);
  auto gateway = make_gateway(config);
  auto m = start_manifest(g, config);
  m.seeds["shuffle"] = a.seed;
  m.backend = gateway->backend_identity();
  fs::path out(a.out);
  std::vector<SynthTuple> tuples;
  json stats = json::object();

  if (which == "c2d" || which == "c2d-simp") {
    if (a.claims.empty()) throw UsageError("--claims is required");
    auto claims = read_claims(a.claims);
    m.add_input(a.claims);
    if (which == "c2d") {
      std::vector<c2d::Result> results(claims.size());
      c2d::Options opt{a.attempts, a.atom_cap};
      parallel_for(claims.size(), a.workers, [&](std::size_t i) { results[i] = c2d::run_c2d(*gateway, claims[i], opt); });
      c2d::RejectionStats total;
      json skipped = json::object();
      for (std::size_t i = 0; i < claims.size(); ++i) {
        total += results[i].stats;
        if (!results[i].skipped.empty()) skipped[claims[i].id] = results[i].skipped;
        tuples.insert(tuples.end(), results[i].tuples.begin(), results[i].tuples.end());
      }
      stats = {{"claims", claims.size()}, {"skipped", skipped}, {"rejections", total.to_json()}};
    } else {
      std::vector<std::vector<SynthTuple>> results(claims.size());
      parallel_for(claims.size(), a.workers, [&](std::size_t i) { results[i] = c2d::run_c2d_simp(*gateway, claims[i]); });
      for (auto& r : results) tuples.insert(tuples.end(), r.begin(), r.end());
      stats = {{"claims", claims.size()}};
    }
  } else {
    if (a.docs.empty()) throw UsageError("--docs is required");
    auto docs = read_docs(a.docs);
    std::vector<std::vector<SynthTuple>> results(docs.size());
    d2c::Options opt{a.atom_cap};
    parallel_for(docs.size(), a.workers, [&](std::size_t i) {
      results[i] = which == "d2c" ? d2c::run_d2c(*gateway, docs[i], opt).tuples : d2c::run_d2c_simp(*gateway, docs[i]);
    });
    for (auto& r : results) tuples.insert(tuples.end(), r.begin(), r.end());
    stats = {{"documents", docs.size()}};
  }

  std::size_t negatives = 0;
  for (const auto& t : tuples) negatives += is_supported(t.label) ? 0 : 1;
  stats["tuples"] = tuples.size();
  stats["negatives"] = negatives;
  stats["usage"] = llm::to_json(gateway->ledger().snapshot());
  export_tuples(out, std::move(tuples), a.seed);
  fs::path stats_path = out;
  stats_path += ".stats.json";
  write_file(stats_path, stats.dump(2) + "\n");
  std::cout << stats.dump(2) << '\n';
  m.add_output(out);
  m.add_output(stats_path);
  finish_manifest(m, out);
  return 0;
}

// ---------------------------------------------------------------- checkers

struct CheckerArgs {
  std::string checker = "stub";
  std::string plan;
  std::string policy = "fixed:0.5";
  std::string thresholds;
  std::size_t workers = 1;
};

struct Runtime {
  ToolkitConfig config;
  std::unique_ptr<llm::Gateway> gateway;
  std::unique_ptr<checker::Checker> checker;
  checker::ChunkPlan plan;
};

Runtime make_runtime(const Globals& g, const CheckerArgs& a, bool needs_gateway) {
  Runtime rt;
  rt.config = load_config(g);
  if (needs_gateway || a.checker.rfind("llm:", 0) == 0) rt.gateway = make_gateway(rt.config);
  rt.checker = checker::make_checker(a.checker, rt.gateway.get());
  rt.plan = plan_from(a.plan, rt.config, a.checker);
  return rt;
}

struct TuneArgs {
  CheckerArgs checker;
  std::string bench;
  std::string out;
};

int cmd_tune(const Globals& g, const TuneArgs& a) {
  auto rt = make_runtime(g, a.checker, false);
  auto m = start_manifest(g, rt.config);
  m.backend = rt.checker->identity();
  auto records = read_bench_file(a.bench);
  auto file = bench::run_tune(*rt.checker, records, {rt.plan, a.checker.workers});
  write_file(a.out, file.to_json().dump(2) + "\n");
  for (const auto& [ds, t] : file.thresholds)
    std::cout << ds << ": t=" << t.threshold << " validation BAcc=" << t.bacc << " (midpoint " << file.midpoint_bacc[ds]
              << ")\n";
  m.add_input(a.bench);
  m.add_output(a.out);
  finish_manifest(m, a.out);
  return 0;
}

struct CheckArgs {
  CheckerArgs checker;
  std::string claim;
  std::vector<std::string> docs;
  bool decompose = false;
};

int cmd_check(const Globals& g, const CheckArgs& a) {
  auto rt = make_runtime(g, a.checker, a.decompose);
  auto spec = parse_policy(a.checker.policy);
  if (spec.policy.mode == checker::ThresholdMode::tuned) {
    if (a.checker.thresholds.empty()) throw UsageError("tuned policy needs --thresholds from a prior `tune` run");
    auto file = bench::ThresholdFile::load(a.checker.thresholds);
    if (!spec.dataset) throw UsageError("check needs tuned:DATASET");
    auto it = file.thresholds.find(*spec.dataset);
    if (it == file.thresholds.end()) throw UsageError("no tuned threshold for dataset " + *spec.dataset);
    spec.policy.value = it->second.threshold;
  }
  std::vector<EvidenceDoc> evidence;
  for (const auto& d : a.docs) evidence.push_back({d, read_file(d)});
  auto out = checker::score_claim(*rt.checker, evidence, a.claim, rt.plan);
  auto label = checker::decide(out, spec.policy);
  json j = {{"score", out.score},
            {"range", {out.range.min, out.range.max}},
            {"threshold", spec.policy.resolve(out.range)},
            {"label", to_string(label)}};
  if (a.decompose) {
    auto facts = decomp::decompose(*rt.gateway, a.claim);
    auto d = checker::decide_facts(*rt.checker, evidence, facts, rt.plan, spec.policy);
    json f = json::array();
    for (std::size_t i = 0; i < d.facts.size(); ++i)
      f.push_back({{"fact", d.facts[i].text}, {"label", to_string(d.fact_labels[i])}});
    j["facts"] = f;
    j["label"] = to_string(d.label);
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct EvalArgs {
  CheckerArgs checker;
  std::string bench;
  std::string out;
  std::string predictions;
  std::string champion;
  std::string champion_name;
  std::string split = "test";
  bool decompose = false;
  bool decontextualize = false;
  std::size_t bootstrap_runs = 1000;
  std::uint64_t seed = 0;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  auto rt = make_runtime(g, a.checker, a.decompose || a.decontextualize);
  auto m = start_manifest(g, rt.config);
  m.seeds["bootstrap"] = a.seed;
  m.backend = rt.gateway ? rt.checker->identity() + " via " + rt.gateway->backend_identity() : rt.checker->identity();

  bench::EvalOptions opt;
  opt.plan = rt.plan;
  auto spec = parse_policy(a.checker.policy);
  if (spec.dataset) throw UsageError("eval tunes per dataset; use --policy tuned");
  opt.policy = spec.policy;
  if (!a.checker.thresholds.empty()) {
    opt.thresholds = bench::ThresholdFile::load(a.checker.thresholds);
    m.add_input(a.checker.thresholds);
  }
  opt.workers = a.checker.workers;
  opt.decompose = a.decompose;
  opt.decontextualize = a.decontextualize;
  opt.split = parse_split(a.split);
  opt.bootstrap_runs = a.bootstrap_runs;
  opt.seed = a.seed;
  if (!a.champion.empty()) {
    opt.champion = bench::read_predictions(a.champion);
    opt.champion_name = a.champion_name.empty() ? fs::path(a.champion).stem().string() : a.champion_name;
    m.add_input(a.champion);
  }

  auto records = read_bench_file(a.bench);
  auto report = bench::run_eval(*rt.checker, rt.gateway.get(), records, opt);
  fs::path out(a.out);
  fs::path preds = a.predictions.empty() ? fs::path(a.out + ".predictions.jsonl") : fs::path(a.predictions);
  write_file(out, report.to_json().dump(2) + "\n");
  bench::write_predictions(preds, report.predictions);
  std::cout << bench::format_results_table({report});
  for (const auto& d : report.datasets) {
    if (d.plain_bacc)
      std::cout << d.dataset << ": BAcc " << d.bacc * 100 << " vs plain " << *d.plain_bacc * 100 << " (delta "
                << (d.bacc - *d.plain_bacc) * 100 << ")\n";
    if (d.changed_fraction) std::cout << d.dataset << ": " << *d.changed_fraction * 100 << "% of claims changed\n";
  }
  m.add_input(a.bench);
  m.add_output(out);
  m.add_output(preds);
  finish_manifest(m, out);
  return 0;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::vector<bench::EvalReport> reports;
  for (const auto& p : a.inputs) {
    try {
      reports.push_back(bench::EvalReport::from_json(json::parse(read_file(p))));
    } catch (const json::parse_error& e) {
      throw DataError(p + ": " + e.what());
    }
  }
  auto table = bench::format_results_table(reports);
  if (a.out.empty())
    std::cout << table;
  else
    write_file(a.out, table);
  return 0;
}

// ---------------------------------------------------------------- annotate

struct ServeArgs {
  std::string tasks;
  std::string service_config;
  std::string log;
  std::string host = "127.0.0.1";
  int port = 8080;
};

annotate::Server* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  auto cfg = annotate::ServiceConfig::load(a.service_config);
  std::optional<fs::path> log;
  if (!a.log.empty()) log = a.log;
  annotate::AnnotationStore store(annotate::AnnotationStore::load_tasks(a.tasks), cfg.annotators, log);
  annotate::Server server(store, cfg);
  int port = server.bind(a.host, a.port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  spdlog::info("annotation service listening on http://{}:{}", a.host, port);
  server.listen();
  g_server = nullptr;
  return 0;
}

void add_checker_flags(CLI::App* cmd, CheckerArgs& a, bool with_policy) {
  cmd->add_option("--checker", a.checker, "stub | remote:URL | llm:MODEL")->capture_default_str();
  cmd->add_option("--plan", a.plan, "whitespace:N or sentence:N (default per checker)");
  if (with_policy) {
    cmd->add_option("--policy", a.policy, "fixed:T | midpoint | tuned[:DATASET]")->capture_default_str();
    cmd->add_option("--thresholds", a.thresholds, "threshold file written by `tune`");
  }
  cmd->add_option("--workers", a.workers, "parallel records")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("factcheck"));

  Globals g;
  g.argv.assign(argv, argv + argc);
  CLI::App app{"Fact-checking data synthesis and benchmark evaluation"};
  app.require_subcommand(1);
  app.add_option("--config", g.config_path, "toolkit config (JSON)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error")->capture_default_str();

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "normalize benchmark records and print dataset statistics");
  c_ingest->add_option("--input", ingest.inputs, "raw JSON-lines files")->required();
  c_ingest->add_option("--dataset", ingest.dataset, "override the dataset id of every record");
  c_ingest->add_option("--out", ingest.out, "normalized output file")->required();

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "assign validation/test splits by query group, per dataset");
  c_split->add_option("--in", split.in)->required();
  c_split->add_option("--out", split.out)->required();
  c_split->add_option("--seed", split.seed)->capture_default_str();
  c_split->add_option("--fraction", split.fraction, "validation fraction")->capture_default_str();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate synthetic training tuples");
  c_synth->require_subcommand(1);
  std::string synth_kind;
  for (std::string kind : {"c2d", "d2c", "c2d-simp", "d2c-simp"}) {
    auto* sub = c_synth->add_subcommand(kind);
    if (kind.rfind("c2d", 0) == 0)
      sub->add_option("--claims", synth.claims, "claims file")->required();
    else
      sub->add_option("--docs", synth.docs, "directory of documents")->required();
    sub->add_option("--out", synth.out)->required();
    sub->add_option("--seed", synth.seed, "export shuffle seed")->capture_default_str();
    sub->add_option("--workers", synth.workers)->capture_default_str()->check(CLI::PositiveNumber);
    if (kind == "c2d") sub->add_option("--attempts", synth.attempts)->capture_default_str()->check(CLI::PositiveNumber);
    if (kind == "c2d" || kind == "d2c") sub->add_option("--atom-cap", synth.atom_cap)->capture_default_str();
    sub->callback([&synth_kind, kind] { synth_kind = kind; });
  }

  TuneArgs tune;
  auto* c_tune = app.add_subcommand("tune", "tune per-dataset thresholds on the validation split");
  c_tune->add_option("--bench", tune.bench)->required();
  c_tune->add_option("--out", tune.out, "threshold file")->required();
  add_checker_flags(c_tune, tune.checker, false);

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "check one claim against evidence documents");
  c_check->add_option("--claim", check.claim)->required();
  c_check->add_option("--doc", check.docs, "evidence document file(s)")->required();
  c_check->add_flag("--decompose", check.decompose);
  add_checker_flags(c_check, check.checker, true);

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "evaluate a checker on a benchmark split");
  c_eval->add_option("--bench", eval.bench)->required();
  c_eval->add_option("--out", eval.out, "report file")->required();
  c_eval->add_option("--predictions", eval.predictions, "per-record predictions (default <out>.predictions.jsonl)");
  c_eval->add_option("--split", eval.split)->capture_default_str();
  c_eval->add_flag("--decompose", eval.decompose);
  c_eval->add_flag("--decontextualize", eval.decontextualize);
  c_eval->add_option("--champion", eval.champion, "predictions file of the run to compare against");
  c_eval->add_option("--champion-name", eval.champion_name);
  c_eval->add_option("--bootstrap-runs", eval.bootstrap_runs)->capture_default_str()->check(CLI::PositiveNumber);
  c_eval->add_option("--seed", eval.seed, "bootstrap seed")->capture_default_str();
  add_checker_flags(c_eval, eval.checker, true);

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "render eval reports as a results table");
  c_report->add_option("--in", report.inputs, "report files")->required();
  c_report->add_option("--out", report.out, "write the table here instead of stdout");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("annotate-serve", "run the annotation HTTP service");
  c_serve->add_option("--tasks", serve.tasks)->required();
  c_serve->add_option("--service-config", serve.service_config)->required();
  c_serve->add_option("--log", serve.log, "append-only event log");
  c_serve->add_option("--host", serve.host)->capture_default_str();
  c_serve->add_option("--port", serve.port)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(g.log_level));
    if (c_ingest->parsed()) return cmd_ingest(g, ingest);
    if (c_split->parsed()) return cmd_split(g, split);
    if (c_synth->parsed()) return cmd_synth(g, synth_kind, synth);
    if (c_tune->parsed()) return cmd_tune(g, tune);
    if (c_check->parsed()) return cmd_check(g, check);
    if (c_eval->parsed()) return cmd_eval(g, eval);
    if (c_report->parsed()) return cmd_report(report);
    if (c_serve->parsed()) return cmd_serve(serve);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}

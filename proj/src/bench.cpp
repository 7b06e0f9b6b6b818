#include "factcheck/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "factcheck/decomp.hpp"
#include "factcheck/digest.hpp"
#include "factcheck/errors.hpp"
#include "factcheck/parallel.hpp"
#include "factcheck/records.hpp"
#include "factcheck/text.hpp"

namespace factcheck::bench {

using nlohmann::json;

const std::vector<std::string>& canonical_dataset_order() {
  static const std::vector<std::string> order = {"AggreFact-CNN", "AggreFact-XSum", "TofuEval-MediaS",
                                                 "TofuEval-MeetB", "Wice",           "Reveal",
                                                 "ClaimVerify",    "FactCheck-GPT",  "ExpertQA",
                                                 "Lfqa"};
  return order;
}

std::vector<std::string> ordered_datasets(const std::vector<std::string>& names) {
  std::set<std::string> present(names.begin(), names.end());
  std::vector<std::string> out;
  for (const auto& d : canonical_dataset_order())
    if (present.erase(d)) out.push_back(d);
  out.insert(out.end(), present.begin(), present.end());
  return out;
}

std::vector<DatasetStats> dataset_stats(const std::vector<BenchRecord>& records) {
  std::map<std::string, DatasetStats> acc;
  std::map<std::string, std::size_t> negatives;
  for (const auto& r : records) {
    auto& s = acc[r.dataset];
    s.dataset = r.dataset;
    ++s.size;
    std::size_t doc_words = 0;
    for (const auto& d : r.grounded.evidence) doc_words += text::word_count(d.text);
    s.mean_doc_words += static_cast<double>(doc_words);
    s.mean_claim_words += static_cast<double>(text::word_count(r.grounded.text));
    if (!is_supported(r.gold)) ++negatives[r.dataset];
  }
  std::vector<std::string> names;
  for (const auto& [name, s] : acc) names.push_back(name);
  std::vector<DatasetStats> out;
  for (const auto& name : ordered_datasets(names)) {
    auto s = acc[name];
    double n = static_cast<double>(s.size);
    s.mean_doc_words /= n;
    s.mean_claim_words /= n;
    s.negative_fraction = static_cast<double>(negatives[name]) / n;
    out.push_back(s);
  }
  return out;
}

namespace {

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context) {
  auto msg = context + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::usage: throw UsageError(msg);
    case ErrorKind::data: throw DataError(msg);
    case ErrorKind::backend: throw BackendError(msg);
  }
  throw DataError(msg);
}

}  // namespace

std::string format_stats_table(const std::vector<DatasetStats>& stats) {
  std::ostringstream os;
  os << pad("Dataset", 18) << pad("Size", 8, true) << pad("Doc words", 12, true) << pad("Claim words", 14, true)
     << pad("% of Neg", 10, true) << '\n';
  for (const auto& s : stats)
    os << pad(s.dataset, 18) << pad(std::to_string(s.size), 8, true) << pad(fmt_fixed(s.mean_doc_words, 1), 12, true)
       << pad(fmt_fixed(s.mean_claim_words, 1), 14, true)
       << pad(fmt_fixed(s.negative_fraction * 100.0, 0) + "%", 10, true) << '\n';
  return os.str();
}

std::vector<BenchRecord> ingest(const std::vector<std::filesystem::path>& inputs,
                                const std::optional<std::string>& dataset_override) {
  std::vector<BenchRecord> out;
  std::set<std::string> ids;
  for (const auto& path : inputs) {
    for (auto& r : read_bench_file(path)) {
      if (dataset_override) r.dataset = *dataset_override;
      if (!ids.insert(r.grounded.id).second)
        throw DataError(path.string() + ": duplicate record id '" + r.grounded.id + "'");
      out.push_back(std::move(r));
    }
  }
  if (out.empty()) throw DataError("no records in the ingestion inputs");
  return out;
}

std::vector<BenchRecord> split_by_dataset(std::vector<BenchRecord> records, std::uint64_t seed, double fraction) {
  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < records.size(); ++i) by_dataset[records[i].dataset].push_back(i);
  for (const auto& [name, idx] : by_dataset) {
    std::vector<BenchRecord> subset;
    for (auto i : idx) subset.push_back(records[i]);
    try {
      subset = make_split(std::move(subset), seed, fraction);
    } catch (const Error& e) {
      rethrow_with_context(e, "dataset " + name);
    }
    for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]].split = subset[k].split;
  }
  return records;
}

// ---------------------------------------------------------------- thresholds

json ThresholdFile::to_json() const {
  json t = json::object();
  for (const auto& [ds, v] : thresholds) t[ds] = {{"threshold", v.threshold}, {"bacc", v.bacc}};
  return {{"checker", checker}, {"plan", plan}, {"thresholds", t}, {"midpoint_bacc", midpoint_bacc}};
}

ThresholdFile ThresholdFile::from_json(const json& j) {
  ThresholdFile f;
  try {
    f.checker = j.at("checker").get<std::string>();
    f.plan = j.at("plan").get<std::string>();
    for (const auto& [ds, v] : j.at("thresholds").items())
      f.thresholds[ds] = {v.at("threshold").get<double>(), v.at("bacc").get<double>()};
    if (j.contains("midpoint_bacc")) f.midpoint_bacc = j["midpoint_bacc"].get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("threshold file: ") + e.what());
  }
  return f;
}

ThresholdFile ThresholdFile::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- scoring

std::vector<checker::CheckerOutput> score_records(checker::Checker& checker, const std::vector<BenchRecord>& records,
                                                  const ScoreOptions& options) {
  std::vector<checker::CheckerOutput> out(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    const auto& r = records[i];
    try {
      out[i] = checker::score_claim(checker, r.grounded.evidence, r.grounded.text, options.plan);
    } catch (const Error& e) {
      rethrow_with_context(e, "record " + r.grounded.id);
    }
  });
  return out;
}

namespace {

std::map<std::string, std::vector<std::size_t>> group_split(const std::vector<BenchRecord>& records, Split split) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.split) throw DataError("record " + r.grounded.id + " has no split; run `split` first");
    if (*r.split == split) out[r.dataset].push_back(i);
  }
  return out;
}

}  // namespace

ThresholdFile run_tune(checker::Checker& checker, const std::vector<BenchRecord>& records,
                       const ScoreOptions& options) {
  auto groups = group_split(records, Split::validation);
  std::set<std::string> all;
  for (const auto& r : records) all.insert(r.dataset);
  for (const auto& d : all)
    if (!groups.count(d)) throw DataError("dataset " + d + " has no validation records");

  std::vector<BenchRecord> validation;
  for (const auto& [ds, idx] : groups)
    for (auto i : idx) validation.push_back(records[i]);
  auto outputs = score_records(checker, validation, options);

  ThresholdFile f;
  f.checker = checker.identity();
  f.plan = options.plan.to_string();
  std::size_t k = 0;
  for (const auto& [ds, idx] : groups) {
    std::vector<metrics::ScoredItem> items;
    checker::ScoreRange range = outputs[k].range;
    for (std::size_t n = 0; n < idx.size(); ++n, ++k) items.push_back({outputs[k].score, validation[k].gold});
    try {
      f.thresholds[ds] = metrics::tune_threshold(items, range);
      f.midpoint_bacc[ds] = metrics::bacc_at(items, range.midpoint());
    } catch (const DataError& e) {
      throw DataError("dataset " + ds + ": " + e.what());
    }
  }
  return f;
}

// ---------------------------------------------------------------- eval

json EvalReport::to_json() const {
  json ds = json::array();
  for (const auto& d : datasets) {
    json j = {{"dataset", d.dataset}, {"n", d.n},         {"tp", d.counts.tp},         {"fn", d.counts.fn},
              {"tn", d.counts.tn},    {"fp", d.counts.fp}, {"bacc", d.bacc},           {"threshold", d.threshold}};
    if (d.plain_bacc) j["plain_bacc"] = *d.plain_bacc;
    if (d.changed_fraction) j["changed_fraction"] = *d.changed_fraction;
    if (d.bootstrap)
      j["bootstrap"] = {{"runs", d.bootstrap->runs},
                        {"p_value", d.bootstrap->p_value},
                        {"significant", d.bootstrap->significant}};
    ds.push_back(std::move(j));
  }
  json j = {{"checker", checker}, {"plan", plan}, {"policy", policy}, {"datasets", ds}, {"average", average},
            {"cost", cost}};
  if (plain_average) j["plain_average"] = *plain_average;
  if (!champion.empty()) j["champion"] = champion;
  return j;
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  try {
    r.checker = j.at("checker").get<std::string>();
    r.plan = j.at("plan").get<std::string>();
    r.policy = j.at("policy").get<std::string>();
    r.average = j.at("average").get<double>();
    if (j.contains("plain_average")) r.plain_average = j["plain_average"].get<double>();
    if (j.contains("champion")) r.champion = j["champion"].get<std::string>();
    if (j.contains("cost")) r.cost = j["cost"];
    for (const auto& d : j.at("datasets")) {
      DatasetResult x;
      x.dataset = d.at("dataset").get<std::string>();
      x.n = d.at("n").get<std::size_t>();
      x.counts = {d.at("tp").get<std::size_t>(), d.at("fn").get<std::size_t>(), d.at("tn").get<std::size_t>(),
                  d.at("fp").get<std::size_t>()};
      x.bacc = d.at("bacc").get<double>();
      x.threshold = d.at("threshold").get<double>();
      if (d.contains("plain_bacc")) x.plain_bacc = d["plain_bacc"].get<double>();
      if (d.contains("changed_fraction")) x.changed_fraction = d["changed_fraction"].get<double>();
      if (d.contains("bootstrap"))
        x.bootstrap = metrics::BootstrapResult{d["bootstrap"].at("runs").get<std::size_t>(),
                                               d["bootstrap"].at("p_value").get<double>(),
                                               d["bootstrap"].at("significant").get<bool>()};
      r.datasets.push_back(std::move(x));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
  return r;
}

EvalReport run_eval(checker::Checker& checker, llm::Gateway* gateway, const std::vector<BenchRecord>& records,
                    const EvalOptions& options) {
  if ((options.decompose || options.decontextualize) && !gateway)
    throw UsageError("--decompose/--decontextualize need an LLM backend (--config)");
  if (options.policy.mode == checker::ThresholdMode::tuned && !options.thresholds)
    throw UsageError("tuned policy needs a thresholds file from a prior `tune` run");
  if (options.thresholds && options.thresholds->checker != checker.identity())
    throw UsageError("thresholds were tuned for '" + options.thresholds->checker + "', not '" + checker.identity() + "'");

  // Canonical order: by record id.
  std::vector<const BenchRecord*> selected;
  for (const auto& [ds, idx] : group_split(records, options.split))
    for (auto i : idx) selected.push_back(&records[i]);
  std::sort(selected.begin(), selected.end(),
            [](const BenchRecord* a, const BenchRecord* b) { return a->grounded.id < b->grounded.id; });
  if (selected.empty()) throw DataError(std::string("no records in the ") + std::string(to_string(options.split)) + " split");

  auto policy_for = [&](const std::string& dataset) {
    if (options.policy.mode != checker::ThresholdMode::tuned) return options.policy;
    auto it = options.thresholds->thresholds.find(dataset);
    if (it == options.thresholds->thresholds.end())
      throw UsageError("no tuned threshold for dataset " + dataset);
    return checker::ThresholdPolicy::tuned(it->second.threshold);
  };

  const bool want_plain = options.decompose || options.decontextualize;
  std::vector<Prediction> preds(selected.size());
  std::vector<double> thresholds(selected.size());
  parallel_for(selected.size(), options.workers, [&](std::size_t i) {
    const auto& r = *selected[i];
    auto& p = preds[i];
    p.id = r.grounded.id;
    p.dataset = r.dataset;
    p.gold = r.gold;
    try {
      auto policy = policy_for(r.dataset);
      const auto& evidence = r.grounded.evidence;
      auto out = checker::score_claim(checker, evidence, r.grounded.text, options.plan);
      thresholds[i] = policy.resolve(out.range);
      auto plain = checker::decide(out, policy);
      std::string claim = r.grounded.text;
      if (options.decontextualize && !r.grounded.context.empty()) {
        auto d = decomp::decontextualize(*gateway, claim, r.grounded.context);
        p.claim_changed = d.changed;
        if (d.changed) {
          claim = d.text;
          out = checker::score_claim(checker, evidence, claim, options.plan);
        }
      }
      p.score = out.score;
      p.predicted = checker::decide(out, policy);
      // FactCheck-GPT claims are already atomic facts.
      if (options.decompose && r.dataset != "FactCheck-GPT")
        p.predicted = checker::check_decomposed(checker, *gateway, evidence, claim, options.plan, policy);
      if (want_plain) p.plain = plain;
    } catch (const Error& e) {
      rethrow_with_context(e, "record " + r.grounded.id);
    }
  });

  EvalReport report;
  report.checker = checker.identity();
  report.plan = options.plan.to_string();
  report.policy = options.policy.to_string();
  report.champion = options.champion_name;

  std::map<std::string, const Prediction*> champion_by_id;
  if (options.champion)
    for (const auto& c : *options.champion) champion_by_id[c.id] = &c;

  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < preds.size(); ++i) by_dataset[preds[i].dataset].push_back(i);
  std::vector<std::string> names;
  for (const auto& [name, idx] : by_dataset) names.push_back(name);

  double sum = 0.0, plain_sum = 0.0;
  for (const auto& name : ordered_datasets(names)) {
    const auto& idx = by_dataset[name];
    DatasetResult d;
    d.dataset = name;
    d.n = idx.size();
    d.threshold = thresholds[idx.front()];
    std::vector<SupportLabel> predicted, gold, plain, champ;
    std::size_t changed = 0;
    for (auto i : idx) {
      predicted.push_back(preds[i].predicted);
      gold.push_back(preds[i].gold);
      if (preds[i].plain) plain.push_back(*preds[i].plain);
      if (preds[i].claim_changed) ++changed;
      if (options.champion) {
        auto it = champion_by_id.find(preds[i].id);
        if (it == champion_by_id.end()) throw DataError("champion run has no prediction for record " + preds[i].id);
        champ.push_back(it->second->predicted);
      }
    }
    d.counts = metrics::confusion(predicted, gold);
    try {
      d.bacc = metrics::bacc(d.counts);
    } catch (const DataError& e) {
      throw DataError("dataset " + name + ": " + e.what());
    }
    if (want_plain) d.plain_bacc = metrics::bacc(plain, gold);
    if (options.decontextualize) d.changed_fraction = static_cast<double>(changed) / static_cast<double>(d.n);
    if (options.champion)
      d.bootstrap = metrics::paired_bootstrap(champ, predicted, gold, options.bootstrap_runs, options.seed);
    sum += d.bacc;
    if (d.plain_bacc) plain_sum += *d.plain_bacc;
    report.datasets.push_back(std::move(d));
  }
  report.average = sum / static_cast<double>(report.datasets.size());
  if (want_plain) report.plain_average = plain_sum / static_cast<double>(report.datasets.size());

  if (gateway) {
    auto usage = gateway->ledger().snapshot();
    report.cost = {{"usage", llm::to_json(usage)}};
    try {
      auto est = llm::estimate_cost(usage, gateway->config().prices);
      report.cost["estimated_total"] = est.total;
      report.cost["estimated_per_model"] = est.per_model;
    } catch (const UsageError& e) {
      spdlog::info("cost estimate skipped: {}", e.what());
    }
  }
  report.predictions = std::move(preds);
  return report;
}

std::string format_results_table(const std::vector<EvalReport>& reports) {
  std::vector<std::string> names;
  for (const auto& r : reports)
    for (const auto& d : r.datasets) names.push_back(d.dataset);
  auto columns = ordered_datasets(names);

  std::size_t label_width = 8;
  for (const auto& r : reports) label_width = std::max(label_width, r.checker.size() + 2);
  std::size_t col = 8;
  for (const auto& c : columns) col = std::max(col, c.size() + 2);

  std::ostringstream os;
  os << pad("Model", label_width);
  for (const auto& c : columns) os << pad(c, col, true);
  os << pad("Avg", col, true) << '\n';
  bool any_marker = false;
  std::string champion;
  for (const auto& r : reports) {
    os << pad(r.checker, label_width);
    for (const auto& c : columns) {
      auto it = std::find_if(r.datasets.begin(), r.datasets.end(), [&](const DatasetResult& d) { return d.dataset == c; });
      std::string cell = "-";
      if (it != r.datasets.end()) {
        cell = fmt_fixed(it->bacc * 100.0, 1);
        if (it->bootstrap && !it->bootstrap->significant) {
          cell += "*";
          any_marker = true;
          champion = r.champion;
        }
      }
      os << pad(cell, col, true);
    }
    os << pad(fmt_fixed(r.average * 100.0, 1), col, true) << '\n';
  }
  if (any_marker)
    os << "* not significantly worse than " << (champion.empty() ? "the champion" : champion)
       << " (paired bootstrap, p >= 0.05)\n";
  return os.str();
}

// ---------------------------------------------------------------- predictions

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for (const auto& [line_no, line] : read_lines(path)) {
    try {
      auto j = json::parse(line);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      p.dataset = j.at("dataset").get<std::string>();
      p.score = j.at("score").get<double>();
      p.predicted = label_from_bool(j.at("predicted").get<int>() == 1);
      p.gold = label_from_bool(j.at("gold").get<int>() == 1);
      if (j.contains("plain")) p.plain = label_from_bool(j["plain"].get<int>() == 1);
      if (j.contains("claim_changed")) p.claim_changed = j["claim_changed"].get<bool>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    json j = {{"id", p.id},
              {"dataset", p.dataset},
              {"score", p.score},
              {"predicted", to_int(p.predicted)},
              {"gold", to_int(p.gold)}};
    if (p.plain) j["plain"] = to_int(*p.plain);
    if (p.claim_changed) j["claim_changed"] = true;
    out += j.dump() + "\n";
  }
  write_file(path, out);
}

// ---------------------------------------------------------------- manifests

void RunManifest::add_output(const std::filesystem::path& p) { outputs[p.string()] = sha256_file(p); }
void RunManifest::add_input(const std::filesystem::path& p) { inputs[p.string()] = sha256_file(p); }

json RunManifest::to_json() const {
  return {{"command", command},         {"config_digest", config_digest}, {"seeds", seeds},
          {"backend", backend},         {"started_at", started_at},       {"finished_at", finished_at},
          {"inputs", inputs},           {"outputs", outputs}};
}

void RunManifest::write(const std::filesystem::path& path) const { write_file(path, to_json().dump(2) + "\n"); }

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  p += ".manifest.json";
  return p;
}

}  // namespace factcheck::bench

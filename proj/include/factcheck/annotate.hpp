#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcheck/core.hpp"

namespace factcheck::annotate {

enum class TaskStatus { open, complete, adjudicating, resolved };
std::string_view to_string(TaskStatus s);

struct AnnotationTask {
  std::string id;
  std::string document;
  std::string claim;
  SupportLabel gold = SupportLabel::unsupported;  // synthetic label; never sent to annotators
  std::string pipeline;                           // e.g. "C2D", "D2C"; never sent to annotators
  std::map<std::string, SupportLabel> verdicts;   // annotator -> verdict
  std::map<std::string, long long> elapsed_ms;
  std::optional<SupportLabel> adjudicated;
  TaskStatus status = TaskStatus::open;
  std::vector<TaskStatus> history{TaskStatus::open};

  bool unanimous() const;
  std::optional<SupportLabel> resolved_label() const;
};

/// Thrown for state-machine and authorization violations; carries the HTTP status to use.
class AnnotateError : public std::runtime_error {
 public:
  AnnotateError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ServiceConfig {
  std::vector<std::string> annotators;               // assigned to every task, in rater order
  std::map<std::string, std::string> tokens;         // bearer token -> annotator name
  std::set<std::string> adjudicator_tokens;
  std::optional<std::filesystem::path> ui_dir;

  /// {"annotators": [...], "tokens": {"tok": "name"}, "adjudicator_tokens": [...], "ui_dir": "..."}
  static ServiceConfig from_json(const nlohmann::json& j);
  static ServiceConfig load(const std::filesystem::path& path);
};

struct PipelineAgreement {
  std::string pipeline;
  std::size_t items = 0;
  double kappa = 0.0;
  double synthetic_label_accuracy = 0.0;
  double mean_annotator_accuracy = 0.0;
  std::map<std::string, double> annotator_accuracy;
};

struct AgreementReport {
  std::vector<PipelineAgreement> pipelines;
  PipelineAgreement overall;
  nlohmann::json to_json() const;
};

/// Task state plus an append-only event log replayed at construction.
///
/// Event log lines: {"type":"verdict","task":..,"annotator":..,"verdict":0|1,"elapsed_ms":..}
/// and {"type":"adjudication","task":..,"verdict":0|1}.
class AnnotationStore {
 public:
  AnnotationStore(std::vector<AnnotationTask> tasks, std::vector<std::string> annotators,
                  std::optional<std::filesystem::path> event_log = std::nullopt);

  /// Tasks file: one JSON object per line with id, document, claim, label (0/1), pipeline.
  static std::vector<AnnotationTask> load_tasks(const std::filesystem::path& path);

  /// Annotator-facing view: tasks with id, document, claim and the caller's own verdict.
  nlohmann::json annotator_view(const std::string& annotator) const;
  /// Adjudicator view: tasks awaiting adjudication with their verdict breakdown.
  nlohmann::json adjudicator_view() const;

  AnnotationTask submit_verdict(const std::string& task_id, const std::string& annotator, SupportLabel verdict,
                                long long elapsed_ms = 0);
  AnnotationTask adjudicate(const std::string& task_id, SupportLabel verdict);

  /// Throws AnnotateError(409) listing unresolved task ids.
  AgreementReport agreement_report() const;

  std::vector<AnnotationTask> tasks() const;
  const std::vector<std::string>& annotators() const { return annotators_; }

 private:
  AnnotationTask& find(const std::string& id);
  void apply_verdict(AnnotationTask& t, const std::string& annotator, SupportLabel verdict, long long elapsed);
  void apply_adjudication(AnnotationTask& t, SupportLabel verdict);
  void append(const nlohmann::json& event);

  mutable std::mutex mu_;
  std::vector<AnnotationTask> tasks_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> annotators_;
  std::optional<std::filesystem::path> log_path_;
  std::ofstream log_;
};

/// Computes agreement over a fixed set of resolved tasks (pre-adjudication verdicts only).
AgreementReport agreement_report(const std::vector<AnnotationTask>& tasks, const std::vector<std::string>& annotators);

/// HTTP front end. GET /tasks, POST /tasks/{id}/verdict, POST /tasks/{id}/adjudication, GET /report.
class Server {
 public:
  Server(AnnotationStore& store, ServiceConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace factcheck::annotate

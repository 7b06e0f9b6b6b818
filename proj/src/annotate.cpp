#include "factcheck/annotate.hpp"

#include <algorithm>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "factcheck/errors.hpp"
#include "factcheck/metrics.hpp"
#include "factcheck/records.hpp"

namespace factcheck::annotate {

using nlohmann::json;

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::open: return "open";
    case TaskStatus::complete: return "complete";
    case TaskStatus::adjudicating: return "adjudicating";
    case TaskStatus::resolved: return "resolved";
  }
  return "?";
}

bool AnnotationTask::unanimous() const {
  if (verdicts.empty()) return false;
  auto first = verdicts.begin()->second;
  return std::all_of(verdicts.begin(), verdicts.end(), [&](const auto& kv) { return kv.second == first; });
}

std::optional<SupportLabel> AnnotationTask::resolved_label() const {
  if (status != TaskStatus::resolved) return std::nullopt;
  if (adjudicated) return adjudicated;
  return verdicts.begin()->second;
}

ServiceConfig ServiceConfig::from_json(const json& j) {
  ServiceConfig c;
  try {
    c.annotators = j.at("annotators").get<std::vector<std::string>>();
    c.tokens = j.at("tokens").get<std::map<std::string, std::string>>();
    if (j.contains("adjudicator_tokens")) c.adjudicator_tokens = j["adjudicator_tokens"].get<std::set<std::string>>();
    if (j.contains("ui_dir")) c.ui_dir = j["ui_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("annotation config: ") + e.what());
  }
  if (c.annotators.size() < 2) throw UsageError("annotation config: at least two annotators are needed");
  for (const auto& [tok, name] : c.tokens)
    if (std::find(c.annotators.begin(), c.annotators.end(), name) == c.annotators.end())
      throw UsageError("annotation config: token for unknown annotator '" + name + "'");
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  auto c = from_json(j);
  if (c.ui_dir && c.ui_dir->is_relative()) c.ui_dir = path.parent_path() / *c.ui_dir;
  return c;
}

// ---------------------------------------------------------------- store

namespace {

SupportLabel parse_verdict(const json& v) {
  if (v.is_number_integer()) {
    auto i = v.get<int>();
    if (i == 0 || i == 1) return label_from_bool(i == 1);
  } else if (v.is_boolean()) {
    return label_from_bool(v.get<bool>());
  } else if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s == "supported") return SupportLabel::supported;
    if (s == "unsupported") return SupportLabel::unsupported;
  }
  throw AnnotateError(400, "verdict must be \"supported\", \"unsupported\", 0 or 1");
}

}  // namespace

AnnotationStore::AnnotationStore(std::vector<AnnotationTask> tasks, std::vector<std::string> annotators,
                                 std::optional<std::filesystem::path> event_log)
    : tasks_(std::move(tasks)), annotators_(std::move(annotators)), log_path_(std::move(event_log)) {
  if (annotators_.empty()) throw UsageError("annotation store needs annotators");
  for (std::size_t i = 0; i < tasks_.size(); ++i)
    if (!index_.emplace(tasks_[i].id, i).second) throw DataError("duplicate task id '" + tasks_[i].id + "'");
  if (!log_path_) return;
  if (std::filesystem::exists(*log_path_)) {
    std::size_t replayed = 0;
    for (const auto& [line_no, line] : read_lines(*log_path_)) {
      try {
        auto e = json::parse(line);
        auto& t = find(e.at("task").get<std::string>());
        if (e.at("type") == "verdict")
          apply_verdict(t, e.at("annotator").get<std::string>(), parse_verdict(e.at("verdict")),
                        e.value("elapsed_ms", 0LL));
        else if (e.at("type") == "adjudication")
          apply_adjudication(t, parse_verdict(e.at("verdict")));
        else
          throw DataError("unknown event type");
        ++replayed;
      } catch (const std::exception& ex) {
        throw DataError(log_path_->string() + ": line " + std::to_string(line_no) + ": " + ex.what());
      }
    }
    spdlog::info("replayed {} annotation events from {}", replayed, log_path_->string());
  }
  log_.open(*log_path_, std::ios::app);
  if (!log_) throw DataError("cannot open event log " + log_path_->string());
}

std::vector<AnnotationTask> AnnotationStore::load_tasks(const std::filesystem::path& path) {
  std::vector<AnnotationTask> out;
  for (const auto& [line_no, line] : read_lines(path)) {
    try {
      auto j = json::parse(line);
      AnnotationTask t;
      t.id = j.at("id").get<std::string>();
      t.document = j.at("document").get<std::string>();
      t.claim = j.at("claim").get<std::string>();
      t.gold = label_from_bool(j.at("label").get<int>() == 1);
      t.pipeline = j.at("pipeline").get<std::string>();
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

AnnotationTask& AnnotationStore::find(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw AnnotateError(404, "no task '" + id + "'");
  return tasks_[it->second];
}

void AnnotationStore::apply_verdict(AnnotationTask& t, const std::string& annotator, SupportLabel verdict,
                                    long long elapsed) {
  if (std::find(annotators_.begin(), annotators_.end(), annotator) == annotators_.end())
    throw AnnotateError(403, "'" + annotator + "' is not assigned to task " + t.id);
  if (t.verdicts.count(annotator))
    throw AnnotateError(409, "'" + annotator + "' already submitted a verdict for task " + t.id);
  if (t.status != TaskStatus::open)
    throw AnnotateError(409, "task " + t.id + " is " + std::string(to_string(t.status)) + ", not open");
  t.verdicts[annotator] = verdict;
  t.elapsed_ms[annotator] = elapsed;
  if (t.verdicts.size() == annotators_.size()) {
    t.status = TaskStatus::complete;
    t.history.push_back(t.status);
    t.status = t.unanimous() ? TaskStatus::resolved : TaskStatus::adjudicating;
    t.history.push_back(t.status);
  }
}

void AnnotationStore::apply_adjudication(AnnotationTask& t, SupportLabel verdict) {
  if (t.status == TaskStatus::open) throw AnnotateError(409, "task " + t.id + " is still collecting verdicts");
  if (t.status != TaskStatus::adjudicating)
    throw AnnotateError(409, "task " + t.id + " has unanimous verdicts and needs no adjudication");
  t.adjudicated = verdict;
  t.status = TaskStatus::resolved;
  t.history.push_back(t.status);
}

void AnnotationStore::append(const json& event) {
  if (!log_.is_open()) return;
  log_ << event.dump() << '\n';
  log_.flush();
  if (!log_) throw DataError("failed to append to the event log");
}

json AnnotationStore::annotator_view(const std::string& annotator) const {
  std::lock_guard lock(mu_);
  json tasks = json::array();
  std::size_t done = 0;
  for (const auto& t : tasks_) {
    json v = {{"id", t.id}, {"document", t.document}, {"claim", t.claim}, {"my_verdict", nullptr}};
    auto it = t.verdicts.find(annotator);
    if (it != t.verdicts.end()) {
      v["my_verdict"] = std::string(to_string(it->second));
      ++done;
    }
    tasks.push_back(std::move(v));
  }
  return {{"annotator", annotator}, {"total", tasks_.size()}, {"submitted", done}, {"tasks", tasks}};
}

json AnnotationStore::adjudicator_view() const {
  std::lock_guard lock(mu_);
  json tasks = json::array();
  std::size_t unresolved = 0;
  for (const auto& t : tasks_) {
    if (t.status != TaskStatus::resolved) ++unresolved;
    if (t.status != TaskStatus::adjudicating) continue;
    json verdicts = json::object();
    for (const auto& [who, v] : t.verdicts) verdicts[who] = std::string(to_string(v));
    tasks.push_back({{"id", t.id}, {"document", t.document}, {"claim", t.claim}, {"verdicts", verdicts}});
  }
  return {{"unresolved", unresolved}, {"tasks", tasks}};
}

AnnotationTask AnnotationStore::submit_verdict(const std::string& task_id, const std::string& annotator,
                                               SupportLabel verdict, long long elapsed_ms) {
  std::lock_guard lock(mu_);
  auto& t = find(task_id);
  apply_verdict(t, annotator, verdict, elapsed_ms);
  append({{"type", "verdict"},
          {"task", task_id},
          {"annotator", annotator},
          {"verdict", to_int(verdict)},
          {"elapsed_ms", elapsed_ms}});
  return t;
}

AnnotationTask AnnotationStore::adjudicate(const std::string& task_id, SupportLabel verdict) {
  std::lock_guard lock(mu_);
  auto& t = find(task_id);
  apply_adjudication(t, verdict);
  append({{"type", "adjudication"}, {"task", task_id}, {"verdict", to_int(verdict)}});
  return t;
}

std::vector<AnnotationTask> AnnotationStore::tasks() const {
  std::lock_guard lock(mu_);
  return tasks_;
}

AgreementReport AnnotationStore::agreement_report() const {
  return annotate::agreement_report(tasks(), annotators_);
}

// ---------------------------------------------------------------- agreement

namespace {

PipelineAgreement agreement_for(const std::string& name, const std::vector<const AnnotationTask*>& tasks,
                                const std::vector<std::string>& annotators) {
  PipelineAgreement a;
  a.pipeline = name;
  a.items = tasks.size();
  std::vector<std::vector<int>> ratings;
  std::size_t synthetic_hits = 0;
  std::map<std::string, std::size_t> hits;
  for (const auto* t : tasks) {
    auto resolved = *t->resolved_label();
    std::vector<int> row;
    for (const auto& who : annotators) {
      auto v = t->verdicts.at(who);
      row.push_back(to_int(v));
      if (v == resolved) ++hits[who];
    }
    ratings.push_back(std::move(row));
    if (t->gold == resolved) ++synthetic_hits;
  }
  const double n = static_cast<double>(tasks.size());
  a.kappa = metrics::fleiss_kappa(ratings);
  a.synthetic_label_accuracy = static_cast<double>(synthetic_hits) / n;
  double sum = 0.0;
  for (const auto& who : annotators) {
    a.annotator_accuracy[who] = static_cast<double>(hits[who]) / n;
    sum += a.annotator_accuracy[who];
  }
  a.mean_annotator_accuracy = sum / static_cast<double>(annotators.size());
  return a;
}

json to_json(const PipelineAgreement& a) {
  return {{"pipeline", a.pipeline},
          {"items", a.items},
          {"kappa", a.kappa},
          {"synthetic_label_accuracy", a.synthetic_label_accuracy},
          {"mean_annotator_accuracy", a.mean_annotator_accuracy},
          {"annotator_accuracy", a.annotator_accuracy}};
}

}  // namespace

json AgreementReport::to_json() const {
  json p = json::array();
  for (const auto& a : pipelines) p.push_back(annotate::to_json(a));
  return {{"pipelines", p}, {"overall", annotate::to_json(overall)}};
}

AgreementReport agreement_report(const std::vector<AnnotationTask>& tasks, const std::vector<std::string>& annotators) {
  std::vector<std::string> open;
  for (const auto& t : tasks)
    if (t.status != TaskStatus::resolved) open.push_back(t.id);
  if (!open.empty()) {
    std::string ids;
    for (const auto& id : open) ids += (ids.empty() ? "" : ", ") + id;
    throw AnnotateError(409, "unresolved tasks: " + ids);
  }
  if (tasks.empty()) throw AnnotateError(409, "no tasks to report on");
  std::map<std::string, std::vector<const AnnotationTask*>> by_pipeline;
  std::vector<const AnnotationTask*> all;
  for (const auto& t : tasks) {
    by_pipeline[t.pipeline].push_back(&t);
    all.push_back(&t);
  }
  AgreementReport r;
  for (const auto& [name, list] : by_pipeline) r.pipelines.push_back(agreement_for(name, list, annotators));
  r.overall = agreement_for("all", all, annotators);
  return r;
}

// ---------------------------------------------------------------- http

struct Server::Impl {
  AnnotationStore& store;
  ServiceConfig config;
  httplib::Server svr;

  Impl(AnnotationStore& s, ServiceConfig c) : store(s), config(std::move(c)) {}

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  std::string bearer(const httplib::Request& req) const {
    auto h = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (h.rfind(prefix, 0) != 0) throw AnnotateError(401, "missing bearer token");
    return h.substr(prefix.size());
  }

  std::string annotator_for(const httplib::Request& req) const {
    auto it = config.tokens.find(bearer(req));
    if (it == config.tokens.end()) throw AnnotateError(401, "unknown annotator token");
    return it->second;
  }

  bool is_adjudicator(const httplib::Request& req) const { return config.adjudicator_tokens.count(bearer(req)) > 0; }

  void require_adjudicator(const httplib::Request& req) const {
    if (!is_adjudicator(req)) throw AnnotateError(403, "adjudicator token required");
  }

  static json body_of(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error&) {
      throw AnnotateError(400, "request body must be JSON");
    }
  }

  template <class Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const AnnotateError& e) {
        send(res, e.status(), {{"error", e.what()}});
      } catch (const std::exception& e) {
        send(res, 500, {{"error", e.what()}});
      }
    };
  }

  void routes() {
    svr.Get("/tasks", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (is_adjudicator(req)) {
        send(res, 200, store.adjudicator_view());
        return;
      }
      auto who = annotator_for(req);
      if (req.has_param("annotator") && req.get_param_value("annotator") != who)
        throw AnnotateError(403, "token does not belong to annotator '" + req.get_param_value("annotator") + "'");
      send(res, 200, store.annotator_view(who));
    }));
    svr.Post(R"(/tasks/([^/]+)/verdict)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto who = annotator_for(req);
      auto body = body_of(req);
      if (!body.contains("verdict")) throw AnnotateError(400, "missing 'verdict'");
      long long elapsed = body.contains("elapsed_ms") && body["elapsed_ms"].is_number_integer()
                              ? body["elapsed_ms"].get<long long>()
                              : 0;
      auto t = store.submit_verdict(req.matches[1], who, parse_verdict(body["verdict"]), elapsed);
      send(res, 200, {{"id", t.id}, {"my_verdict", std::string(to_string(t.verdicts.at(who)))}});
    }));
    svr.Post(R"(/tasks/([^/]+)/adjudication)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      require_adjudicator(req);
      auto body = body_of(req);
      if (!body.contains("verdict")) throw AnnotateError(400, "missing 'verdict'");
      auto t = store.adjudicate(req.matches[1], parse_verdict(body["verdict"]));
      send(res, 200, {{"id", t.id}, {"status", std::string(to_string(t.status))},
                      {"adjudicated", std::string(to_string(*t.adjudicated))}});
    }));
    svr.Get("/report", guarded([this](const httplib::Request& req, httplib::Response& res) {
      require_adjudicator(req);
      send(res, 200, store.agreement_report().to_json());
    }));
    if (config.ui_dir && !svr.set_mount_point("/", config.ui_dir->string()))
      spdlog::warn("UI directory {} does not exist; static files disabled", config.ui_dir->string());
  }
};

Server::Server(AnnotationStore& store, ServiceConfig config) : impl_(std::make_unique<Impl>(store, std::move(config))) {
  impl_->routes();
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->svr.bind_to_any_port(host);
    if (bound < 0) throw UsageError("cannot bind " + host);
    return bound;
  }
  if (!impl_->svr.bind_to_port(host, port)) throw UsageError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Server::listen() { impl_->svr.listen_after_bind(); }

void Server::stop() {
  if (impl_ && impl_->svr.is_running()) impl_->svr.stop();
}

}  // namespace factcheck::annotate

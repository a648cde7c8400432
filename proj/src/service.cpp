#include "litharvest/service.hpp"

#include "litharvest/csv.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace litharvest {

JobNotReady::JobNotReady(const std::string& alias, JobStatus status)
    : std::runtime_error("job " + alias + " is " + std::string(status_name(status)) + ", not Done") {}

// ---------------------------------------------------------------------------
// Submission parsing

namespace {

std::optional<long long> integer_field(const nlohmann::json& obj, const char* key, const std::string& field,
                                       std::vector<FieldError>& errors) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) {
    errors.push_back({field, "must be an integer"});
    return std::nullopt;
  }
  return it->get<long long>();
}

}  // namespace

JobSubmission JobSubmission::from_json(const nlohmann::json& body) {
  if (!body.is_object()) throw ValidationError(std::vector<FieldError>{{"body", "request body must be a JSON object"}});
  std::vector<FieldError> errors;
  JobSubmission sub;

  if (auto it = body.find("alias"); it != body.end() && it->is_string()) sub.alias = it->get<std::string>();
  else errors.push_back({"alias", "alias is required"});
  if (auto it = body.find("query"); it != body.end() && it->is_string()) {
    sub.query = it->get<std::string>();
    try {
      parse_query(sub.query);
    } catch (const QueryParseError& e) {
      errors.push_back({"query", e.what()});
    }
  } else {
    errors.push_back({"query", "query is required"});
  }

  const nlohmann::json& sources = body.contains("sources") && body["sources"].is_object() ? body["sources"] : body;
  for (Source s : kAllSources) {
    const std::string key(source_key(s));
    auto it = sources.find(key);
    if (it == sources.end()) continue;
    if (!it->is_object()) {
      errors.push_back({key, "must be an object"});
      continue;
    }
    SourceSettings& settings = sub.sources[s];
    if (auto e = it->find("enabled"); e != it->end()) {
      if (e->is_boolean()) settings.enabled = e->get<bool>();
      else errors.push_back({key + ".enabled", "must be a boolean"});
    }
    if (s == Source::WebOfScience) {
      if (auto pages = integer_field(*it, "pages", key + ".pages", errors)) {
        if (*pages < 0 || *pages > static_cast<long long>(kMaxWosPages)) {
          errors.push_back({key + ".pages", "page count must be between 0 and 100"});
        } else {
          settings.page_count = static_cast<std::size_t>(*pages);
        }
      }
    } else if (auto max = integer_field(*it, "max", key + ".max", errors)) {
      if (*max < 1 || *max > static_cast<long long>(kMaxRecordsPerSource)) {
        errors.push_back({key + ".max", "record limit must be between 1 and 5000"});
      } else {
        settings.record_limit = static_cast<std::size_t>(*max);
      }
    }
  }

  const auto from = integer_field(body, "year_from", "year_from", errors);
  const auto to = integer_field(body, "year_to", "year_to", errors);
  if (from && to) {
    sub.year_range = YearRange{static_cast<int>(*from), static_cast<int>(*to)};
  } else if (from || to) {
    errors.push_back({from ? "year_to" : "year_from", "year_from and year_to must be given together"});
  }

  if (!errors.empty()) {
    // Report the remaining syntax and bound problems in the same response.
    for (auto& e : field_errors(sub.alias, sub.sources, sub.year_range)) {
      const bool seen = std::any_of(errors.begin(), errors.end(), [&](const FieldError& f) { return f.field == e.field; });
      if (!seen) errors.push_back(std::move(e));
    }
    throw ValidationError(std::move(errors));
  }
  return sub;
}

nlohmann::json JobSubmission::to_json() const {
  nlohmann::json j{{"alias", alias}, {"query", query}};
  for (const auto& [source, s] : sources) {
    nlohmann::json entry{{"enabled", s.enabled}};
    if (source == Source::WebOfScience) entry["pages"] = s.page_count;
    else entry["max"] = s.record_limit;
    j[std::string(source_key(source))] = entry;
  }
  if (year_range) {
    j["year_from"] = year_range->from;
    j["year_to"] = year_range->to;
  }
  return j;
}

HarvestJob JobSubmission::to_job() const {
  std::optional<QueryExpr> parsed;
  std::vector<FieldError> errors;
  try {
    parsed = parse_query(query);
  } catch (const QueryParseError& e) {
    errors.push_back({"query", e.what()});
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  HarvestJob job{.alias = alias,
                 .query = std::move(*parsed),
                 .sources = sources,
                 .year_range = year_range,
                 .status = JobStatus::Pending,
                 .created_at = std::chrono::system_clock::now(),
                 .finished_at = std::nullopt,
                 .counters = {}};
  validate(job);
  return job;
}

// ---------------------------------------------------------------------------

struct JobService::LiveJob {
  mutable std::mutex mutex;
  HarvestJob job;
  std::map<Source, std::size_t> counters;
  std::vector<std::string> warnings;
  std::optional<DedupReport> dedup;
  std::map<Label, std::size_t> labels;
  std::string model_id;

  explicit LiveJob(HarvestJob j) : job(std::move(j)) {}

  JobManifest manifest() const {
    std::lock_guard lock(mutex);
    JobManifest m = make_manifest(job);
    m.source_counts = counters;
    m.dedup = dedup;
    m.warnings = warnings;
    m.model_id = model_id;
    return m;
  }
};

JobService::JobService(ServiceConfig config) : config_(std::move(config)), store_(config_.data_dir) {
  if (!config_.connector_factory) {
    config_.connector_factory = [connectors = config_.connectors] { return build_connectors(connectors); };
  }
  if (!config_.backend_factory) {
    config_.backend_factory = [endpoint = config_.gen_endpoint](const QueryExpr& q) -> std::unique_ptr<GenerationBackend> {
      if (endpoint) return std::make_unique<HttpGenerationBackend>(*endpoint);
      return std::make_unique<StubBackend>(q);
    };
  }
  config_.generation.validate();
}

JobService::~JobService() { stop(); }

void JobService::start() {
  std::lock_guard lock(jobs_mutex_);
  if (!workers_.empty()) return;
  // Jobs left mid-run by a previous process can never finish.
  for (const auto& summary : store_.list_jobs()) {
    if (summary.warning || jobs_.contains(summary.alias)) continue;
    if (summary.status == JobStatus::Done || summary.status == JobStatus::Failed) continue;
    try {
      JobManifest m = store_.load_manifest(summary.alias);
      m.status = JobStatus::Failed;
      m.finished_at = format_timestamp(std::chrono::system_clock::now());
      m.warnings.push_back("interrupted: the service stopped while the job was " +
                           std::string(status_name(summary.status)));
      store_.update_manifest(m);
      spdlog::warn("[{}] marked Failed: interrupted while {}", summary.alias, status_name(summary.status));
    } catch (const std::exception& e) {
      spdlog::error("[{}] could not mark interrupted job: {}", summary.alias, e.what());
    }
  }
  const std::size_t n = std::max<std::size_t>(1, config_.max_concurrent_jobs);
  for (std::size_t i = 0; i < n; ++i) {
    workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
  }
}

void JobService::stop() {
  std::vector<std::jthread> workers;
  {
    std::lock_guard lock(jobs_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.request_stop();
  jobs_changed_.notify_all();
  workers.clear();  // joins
}

void JobService::worker_loop(std::stop_token stop) {
  while (true) {
    std::string alias;
    {
      std::unique_lock lock(jobs_mutex_);
      jobs_changed_.wait(lock, [&] { return stop.stop_requested() || !queue_.empty(); });
      if (stop.stop_requested()) return;
      alias = std::move(queue_.front());
      queue_.pop_front();
    }
    run(alias);
  }
}

std::string JobService::submit(const JobSubmission& submission) {
  HarvestJob job = submission.to_job();
  auto live = std::make_shared<LiveJob>(std::move(job));
  {
    std::lock_guard lock(jobs_mutex_);
    if (jobs_.contains(submission.alias)) throw AliasConflict(submission.alias);
    store_.create(live->manifest());
    jobs_.emplace(submission.alias, live);
    queue_.push_back(submission.alias);
  }
  jobs_changed_.notify_all();
  spdlog::info("[{}] job submitted: {}", submission.alias, submission.query);
  return submission.alias;
}

std::shared_ptr<JobService::LiveJob> JobService::find_live(const std::string& alias) const {
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(alias);
  return it == jobs_.end() ? nullptr : it->second;
}

void JobService::notify_changed() {
  { std::lock_guard lock(jobs_mutex_); }
  jobs_changed_.notify_all();
}

void JobService::persist_manifest(LiveJob& live) {
  try {
    store_.update_manifest(live.manifest());
  } catch (const std::exception& e) {
    spdlog::error("[{}] could not persist manifest: {}", live.job.alias, e.what());
  }
}

void JobService::finish(LiveJob& live, JobStatus status, std::span<const ArticleRecord> records,
                        std::span<const ClassificationResult> classifications) {
  HarvestJob snapshot = [&] {
    std::lock_guard lock(live.mutex);
    return live.job;
  }();
  snapshot.status = status;
  snapshot.finished_at = std::chrono::system_clock::now();

  JobManifest m = live.manifest();
  m.status = status;
  m.finished_at = format_timestamp(*snapshot.finished_at);
  JobReports reports{m.source_counts, m.dedup, m.warnings, nullptr};
  try {
    store_.save(m, records, classifications, reports);
  } catch (const std::exception& e) {
    spdlog::error("[{}] could not save job data: {}", snapshot.alias, e.what());
    status = JobStatus::Failed;
  }
  {
    std::lock_guard lock(live.mutex);
    live.job.advance(status);
    live.job.finished_at = snapshot.finished_at;
  }
  notify_changed();
}

void JobService::run(const std::string& alias) {
  auto live = find_live(alias);
  if (!live) throw JobNotFound(alias);
  {
    std::lock_guard lock(live->mutex);
    if (live->job.status != JobStatus::Pending) return;
  }
  auto advance = [&](JobStatus next) {
    {
      std::lock_guard lock(live->mutex);
      live->job.advance(next);
    }
    persist_manifest(*live);
    notify_changed();
  };
  auto fail = [&](const std::string& why) {
    spdlog::error("[{}] job failed: {}", alias, why);
    {
      std::lock_guard lock(live->mutex);
      live->warnings.push_back(why);
    }
    finish(*live, JobStatus::Failed, {}, {});
  };

  const QueryExpr query = live->job.query;
  try {
    advance(JobStatus::Collecting);
    const ConnectorSet connectors = config_.connector_factory();
    HarvestOptions options;
    options.concurrency_limit = config_.harvest_concurrency;
    options.on_progress = [&](const ProgressEvent& e) {
      std::lock_guard lock(live->mutex);
      auto& c = live->counters[e.source];
      c = std::max(c, e.source_total);
    };
    HarvestResult harvest = run_harvest(live->job, connectors, options);
    {
      std::lock_guard lock(live->mutex);
      live->counters = harvest.counts;
      live->job.counters = harvest.counts;
      live->warnings.insert(live->warnings.end(), harvest.warnings.begin(), harvest.warnings.end());
    }

    advance(JobStatus::Filtering);
    PipelineResult clean = run_pipeline(std::move(harvest.records), config_.pipeline);
    {
      std::lock_guard lock(live->mutex);
      live->dedup = clean.report;
    }

    advance(JobStatus::Classifying);
    auto backend = config_.backend_factory(query);
    auto results = classify_batch(clean.records, query, *backend, config_.generation, config_.classify);
    {
      std::lock_guard lock(live->mutex);
      live->model_id = backend->model_id();
      for (const auto& r : results) ++live->labels[r.label];
      if (!results.empty()) live->model_id = results.front().model_id;
    }
    finish(*live, JobStatus::Done, clean.records, results);
    spdlog::info("[{}] job done: {} records", alias, clean.records.size());
  } catch (const HarvestFailed& e) {
    {
      std::lock_guard lock(live->mutex);
      live->warnings.insert(live->warnings.end(), e.warnings().begin(), e.warnings().end());
    }
    fail(e.what());
  } catch (const BackendUnavailable& e) {
    fail(std::string("classification backend unavailable: ") + e.what());
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

bool JobService::wait(const std::string& alias, std::chrono::milliseconds timeout) const {
  auto live = find_live(alias);
  if (!live) return store_.exists(alias);
  std::unique_lock lock(jobs_mutex_);
  return jobs_changed_.wait_for(lock, timeout, [&] {
    std::lock_guard inner(live->mutex);
    return live->job.status == JobStatus::Done || live->job.status == JobStatus::Failed;
  });
}

namespace {

nlohmann::json counts_by_name(const std::map<Source, std::size_t>& counts) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [source, n] : counts) j[std::string(source_name(source))] = n;
  return j;
}

nlohmann::json status_document(const JobManifest& m, const std::map<Label, std::size_t>* labels) {
  nlohmann::json doc = to_json(m);
  doc.erase("files");
  doc.erase("generation");
  doc.erase("source_counts");
  doc["stage"] = doc["status"];
  doc["counters"] = counts_by_name(m.source_counts);
  doc["dedup_report"] = doc["dedup"];
  doc.erase("dedup");
  if (labels != nullptr && !labels->empty()) {
    nlohmann::json l = nlohmann::json::object();
    for (auto label : {Label::Relevant, Label::Irrelevant, Label::Unknown}) {
      auto it = labels->find(label);
      l[std::string(label_name(label))] = it == labels->end() ? 0 : it->second;
    }
    doc["classification"] = l;
  } else {
    doc["classification"] = nullptr;
  }
  return doc;
}

}  // namespace

nlohmann::json JobService::job_status(const std::string& alias) const {
  if (auto live = find_live(alias)) {
    const JobManifest m = live->manifest();
    std::lock_guard lock(live->mutex);
    return status_document(m, &live->labels);
  }
  const StoredJob stored = store_.load(alias);
  std::map<Label, std::size_t> labels;
  for (const auto& c : stored.classifications) ++labels[c.label];
  return status_document(stored.manifest, &labels);
}

nlohmann::json JobService::list_jobs() const {
  nlohmann::json jobs = nlohmann::json::array();
  for (const auto& s : store_.list_jobs()) {
    nlohmann::json j{{"alias", s.alias},
                     {"status", status_name(s.status)},
                     {"query", s.query},
                     {"created_at", s.created_at},
                     {"finished_at", s.finished_at ? nlohmann::json(*s.finished_at) : nlohmann::json(nullptr)},
                     {"record_count", s.record_count}};
    if (s.warning) j["warning"] = *s.warning;
    jobs.push_back(std::move(j));
  }
  return {{"jobs", jobs}};
}

StoredJob JobService::load_finished(const std::string& alias) const {
  if (auto live = find_live(alias)) {
    std::lock_guard lock(live->mutex);
    if (live->job.status != JobStatus::Done) throw JobNotReady(alias, live->job.status);
  }
  StoredJob stored = store_.load(alias);
  if (stored.manifest.status != JobStatus::Done) throw JobNotReady(alias, stored.manifest.status);
  return stored;
}

std::string JobService::download(const std::string& alias) const {
  const StoredJob stored = load_finished(alias);
  return export_csv(stored.records, stored.classifications);
}

EvaluationReport JobService::evaluate(const std::string& alias, std::string_view human_csv) const {
  const StoredJob stored = load_finished(alias);
  const HumanRelevantList human = HumanRelevantList::from_csv(human_csv, alias);
  std::vector<Label> labels(stored.records.size(), Label::Unknown);
  for (const auto& c : stored.classifications) {
    if (c.record_index < labels.size()) labels[c.record_index] = c.label;
  }
  return litharvest::evaluate(human, stored.records, labels);
}

}  // namespace litharvest

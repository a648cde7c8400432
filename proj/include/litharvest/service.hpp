#pragma once

#include "litharvest/classifier.hpp"
#include "litharvest/connector.hpp"
#include "litharvest/evaluator.hpp"
#include "litharvest/harvest.hpp"
#include "litharvest/pipeline.hpp"
#include "litharvest/store.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace litharvest {

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  ConnectorConfig connectors;
  // Pipelines executing at the same time.
  std::size_t max_concurrent_jobs = 2;
  // In-flight harvest requests per job.
  std::size_t harvest_concurrency = 8;
  GenerationParams generation;
  ClassifyOptions classify;
  PipelineOptions pipeline;
  // GEN_ENDPOINT; the stub backend is used when absent.
  std::optional<std::string> gen_endpoint;

  // Injection points; defaults build connectors from `connectors` and pick
  // the HTTP or stub backend.
  std::function<ConnectorSet()> connector_factory;
  std::function<std::unique_ptr<GenerationBackend>(const QueryExpr&)> backend_factory;
};

// Body of POST /api/jobs:
//   {"alias": "...", "query": "...",
//    "scopus": {"enabled": true, "max": 5000}, "sciencedirect": {...},
//    "wos": {"enabled": true, "pages": 10}, "gscholar": {"enabled": false, "max": 1000},
//    "fixture": {...}, "year_from": 2019, "year_to": 2021}
// Omitted sources keep their defaults.
struct JobSubmission {
  std::string alias;
  std::string query;
  std::map<Source, SourceSettings> sources = default_source_settings();
  std::optional<YearRange> year_range;

  // Throws ValidationError with field-level messages.
  static JobSubmission from_json(const nlohmann::json& body);
  nlohmann::json to_json() const;
  // Parses the query and validates every bound; throws ValidationError.
  HarvestJob to_job() const;
};

class JobNotReady : public std::runtime_error {
 public:
  JobNotReady(const std::string& alias, JobStatus status);
};

// Runs harvest jobs through Collecting -> Filtering -> Classifying -> Done
// on a small worker pool, persisting each transition to the job store. The
// HTTP layer and the CLI both go through this class.
class JobService {
 public:
  explicit JobService(ServiceConfig config);
  ~JobService();
  JobService(const JobService&) = delete;
  JobService& operator=(const JobService&) = delete;

  // Starts the background workers. Without it, submitted jobs wait until
  // run() is called for them. Stored jobs that a previous process left
  // unfinished are marked Failed first.
  void start();
  void stop();

  // Validates, reserves the alias and enqueues the job. Throws
  // ValidationError or AliasConflict.
  std::string submit(const JobSubmission& submission);
  // Executes a submitted job on the calling thread.
  void run(const std::string& alias);
  // Blocks until the job reaches Done/Failed or the timeout expires.
  bool wait(const std::string& alias, std::chrono::milliseconds timeout) const;

  // Status document for GET /api/jobs/{alias}. Throws JobNotFound.
  nlohmann::json job_status(const std::string& alias) const;
  nlohmann::json list_jobs() const;
  // CSV export of a finished job. Throws JobNotFound or JobNotReady.
  std::string download(const std::string& alias) const;
  EvaluationReport evaluate(const std::string& alias, std::string_view human_csv) const;

  JobStore& store() noexcept { return store_; }
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct LiveJob;

  std::shared_ptr<LiveJob> find_live(const std::string& alias) const;
  void worker_loop(std::stop_token stop);
  void persist_manifest(LiveJob& live);
  void notify_changed();
  void finish(LiveJob& live, JobStatus status, std::span<const ArticleRecord> records,
              std::span<const ClassificationResult> classifications);
  StoredJob load_finished(const std::string& alias) const;

  ServiceConfig config_;
  JobStore store_;

  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable jobs_changed_;
  std::map<std::string, std::shared_ptr<LiveJob>> jobs_;
  std::deque<std::string> queue_;
  std::vector<std::jthread> workers_;
};

}  // namespace litharvest

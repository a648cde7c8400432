#pragma once

#include "litharvest/classifier.hpp"
#include "litharvest/harvest.hpp"
#include "litharvest/pipeline.hpp"
#include "litharvest/record.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace litharvest {

struct JobManifest {
  std::string alias;
  std::string query;  // generic rendering
  std::map<Source, SourceSettings> sources;
  std::optional<YearRange> year_range;
  JobStatus status = JobStatus::Pending;
  std::string template_id{kPromptTemplateId};
  std::string model_id;
  std::string created_at;
  std::optional<std::string> finished_at;
  // Records collected per source, then the cleaning stage counts.
  std::map<Source, std::size_t> source_counts;
  std::optional<DedupReport> dedup;
  std::vector<std::string> warnings;
  // Logical name ("records", "classifications", "reports") -> file name.
  std::map<std::string, std::string> files;
  std::size_t generation = 0;

  friend bool operator==(const JobManifest& a, const JobManifest& b);
};

nlohmann::json to_json(const JobManifest& m);
JobManifest manifest_from_json(const nlohmann::json& j);
JobManifest make_manifest(const HarvestJob& job);

struct JobReports {
  std::map<Source, std::size_t> source_counts;
  std::optional<DedupReport> dedup;
  std::vector<std::string> warnings;
  nlohmann::json evaluation;  // null unless an evaluation was stored
};

struct StoredJob {
  JobManifest manifest;
  std::vector<ArticleRecord> records;
  std::vector<ClassificationResult> classifications;
  JobReports reports;
};

struct JobSummary {
  std::string alias;
  JobStatus status = JobStatus::Failed;
  std::string query;
  std::string created_at;
  std::optional<std::string> finished_at;
  std::size_t record_count = 0;
  std::optional<std::string> warning;
};

class AliasConflict : public std::runtime_error {
 public:
  explicit AliasConflict(const std::string& alias);
};

class JobNotFound : public std::runtime_error {
 public:
  explicit JobNotFound(const std::string& alias);
};

class StoreIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Plain-directory job store: <root>/<alias>/manifest.json plus
// generation-numbered data files (records-N.jsonl, classifications-N.jsonl,
// reports-N.json). Data files are written first (temp file + rename); the
// manifest rename commits the new generation, after which the previous
// generation's files are removed. Readers only follow the manifest, so an
// interrupted save leaves the previous state visible.
class JobStore {
 public:
  explicit JobStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Reserves the alias (atomic directory creation) and writes the initial
  // manifest. Throws AliasConflict if the alias exists.
  void create(const JobManifest& manifest);
  // Writes a new generation of data files and commits the manifest.
  void save(JobManifest manifest, std::span<const ArticleRecord> records,
            std::span<const ClassificationResult> classifications, const JobReports& reports);
  // Rewrites only the manifest (status / counters), keeping data files.
  void update_manifest(const JobManifest& manifest);

  bool exists(const std::string& alias) const;
  JobManifest load_manifest(const std::string& alias) const;
  StoredJob load(const std::string& alias) const;
  // Newest first; unreadable manifests are listed as Failed with a warning.
  std::vector<JobSummary> list_jobs() const;

  // Test hook called at named points of a save ("data-written" right before
  // the manifest commit). Throwing from it simulates a crash.
  void set_fault_hook(std::function<void(std::string_view)> hook) { fault_hook_ = std::move(hook); }

 private:
  std::filesystem::path job_dir(const std::string& alias) const;
  void write_manifest(const JobManifest& manifest) const;

  std::filesystem::path root_;
  std::function<void(std::string_view)> fault_hook_;
  mutable std::mutex mutex_;
};

// Writes `content` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

inline constexpr std::string_view kCsvHeader =
    "title,authors,year,doi,url,abstract,source,source_record_id,language,relevance,model_id";

// UTF-8 CSV with the fixed header above; authors joined with "; "; absent
// values empty; rows in record order. `classifications` are matched to
// records by record_index; unclassified records get empty relevance/model.
std::string export_csv(std::span<const ArticleRecord> records,
                       std::span<const ClassificationResult> classifications = {});

}  // namespace litharvest

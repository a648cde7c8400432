#pragma once

#include "litharvest/connector.hpp"
#include "litharvest/query.hpp"
#include "litharvest/record.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace litharvest {

inline constexpr std::size_t kMaxRecordsPerSource = 5000;
inline constexpr std::size_t kMaxWosPages = 100;
inline constexpr std::size_t kMaxRecordsPerYear = 1000;

enum class JobStatus { Pending, Collecting, Filtering, Classifying, Done, Failed };

std::string_view status_name(JobStatus status);
std::optional<JobStatus> parse_status(std::string_view name);
// Forward-only: Pending -> Collecting -> Filtering -> Classifying -> Done,
// and any non-terminal state -> Failed.
bool can_transition(JobStatus from, JobStatus to);

struct SourceSettings {
  bool enabled = false;
  // Records-paginated sources: maximum records to collect, in [1, 5000].
  std::size_t record_limit = kMaxRecordsPerSource;
  // Pages-paginated sources (Web of Science): pages to collect, in [0, 100].
  std::size_t page_count = 0;
};

// Scopus and ScienceDirect on with 5000 records, Web of Science on with 10
// pages, Google Scholar and the generic fixture source off.
std::map<Source, SourceSettings> default_source_settings();

struct YearRange {
  int from = 0;
  int to = 0;
  friend bool operator==(const YearRange&, const YearRange&) = default;
};

struct FieldError {
  std::string field;
  std::string message;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

using Timestamp = std::chrono::system_clock::time_point;
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view s);

struct HarvestJob {
  std::string alias;
  QueryExpr query;
  std::map<Source, SourceSettings> sources = default_source_settings();
  std::optional<YearRange> year_range;
  JobStatus status = JobStatus::Pending;
  Timestamp created_at{};
  std::optional<Timestamp> finished_at;
  std::map<Source, std::size_t> counters;

  // Throws std::logic_error on a backward or out-of-terminal transition.
  void advance(JobStatus next);
};

bool valid_alias(std::string_view alias);

// Checks alias syntax and every per-source bound; throws ValidationError
// listing all violations (fields "alias", "scopus.max", "sciencedirect.max",
// "wos.pages", "gscholar.max", "fixture.max", "year_from", "year_to").
void validate(const HarvestJob& job);
// The checks behind validate(), usable before the query is parsed.
std::vector<FieldError> field_errors(std::string_view alias, const std::map<Source, SourceSettings>& sources,
                                     const std::optional<YearRange>& year_range);

// Adds the dialect's publication-year field to a rendered query. Generic
// queries carry the year on the PageRequest instead.
std::string with_year_clause(std::string rendered, QueryDialect dialect, int year);

// One sequentially paged request stream (a source, optionally one year).
struct RequestStream {
  Source source = Source::Fixture;
  std::optional<int> year;
  std::string query;
  PaginationUnit unit = PaginationUnit::Records;
  std::size_t page_size = 1;
  // Maximum records collected by this stream.
  std::size_t cap = 0;
  // Pages-paginated streams stop after this many pages.
  std::optional<std::size_t> max_pages;

  PageRequest first_request() const;
};

using HarvestPlan = std::map<Source, std::vector<RequestStream>>;

// With a year range: one stream per (source, year) capped at
// min(source limit, 1000); otherwise one stream per source capped at the
// source limit. Disabled sources and Web of Science with 0 pages get no
// stream. Throws ValidationError.
HarvestPlan plan_requests(const HarvestJob& job, const ConnectorSet& connectors);

struct ProgressEvent {
  Source source;
  std::optional<int> year;
  std::size_t page_number;     // 1-based within the stream
  std::size_t page_records;    // records in this page
  std::size_t source_total;    // records collected for the source so far
};

struct HarvestResult {
  std::vector<ArticleRecord> records;
  std::map<Source, std::size_t> counts;
  std::vector<std::string> warnings;
  std::vector<Source> failed_sources;
};

class HarvestFailed : public std::runtime_error {
 public:
  HarvestFailed(const std::string& message, std::vector<std::string> warnings);
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  std::vector<std::string> warnings_;
};

struct HarvestOptions {
  std::size_t concurrency_limit = 8;
  std::function<void(const ProgressEvent&)> on_progress;
};

// Runs every planned stream on a bounded worker pool. The combined list is
// the concatenation of all streams in plan order (source priority, then
// year), independent of scheduling. A failed stream keeps the records it
// already fetched and adds a warning; HarvestFailed is thrown only when
// every source that had streams failed all of them.
HarvestResult run_harvest(const HarvestJob& job, const ConnectorSet& connectors, const HarvestOptions& options = {});

}  // namespace litharvest

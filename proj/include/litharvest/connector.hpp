#pragma once

#include "litharvest/query.hpp"
#include "litharvest/record.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <string>
#include <vector>

namespace litharvest {

enum class PaginationUnit { Records, Pages };

struct Capabilities {
  bool provides_abstracts = true;
  PaginationUnit pagination_unit = PaginationUnit::Records;
  std::size_t max_records_per_request = 100;
};

enum class ConnectorKind { Live, Fixture };

struct ConnectorSpec {
  Source source = Source::Fixture;
  ConnectorKind kind = ConnectorKind::Fixture;
  Capabilities capabilities;
  // Requests per second; 0 disables rate limiting.
  double rate_limit = 0.0;
  std::vector<std::string> credential_env_names;
  QueryDialect dialect = QueryDialect::Generic;
};

// Records-based sources page with an opaque cursor (absent on the first
// request); pages-based sources use page_index. Never both.
struct PageRequest {
  std::string query;
  std::optional<std::string> cursor;
  std::optional<std::size_t> page_index;
  std::optional<int> year;
  std::size_t limit = 1;
};

struct Page {
  std::vector<ArticleRecord> records;
  std::optional<std::string> next;
  std::optional<std::size_t> total_available;
  // Raw payloads that could not be mapped to a record (e.g. missing title),
  // kept for the job's error log.
  std::vector<std::string> rejected;
};

class ConnectorError : public std::runtime_error {
 public:
  enum class Kind { Auth, RateLimited, Transport, MalformedPayload };

  ConnectorError(Kind kind, const std::string& message, std::string raw_body = {});
  Kind kind() const noexcept { return kind_; }
  const std::string& raw_body() const noexcept { return raw_body_; }
  bool retryable() const noexcept { return kind_ == Kind::RateLimited || kind_ == Kind::Transport; }

 private:
  Kind kind_;
  std::string raw_body_;
};

std::string_view error_kind_name(ConnectorError::Kind kind);

// Clock and sleep hooks, replaced by a virtual clock in tests.
struct TimeSource {
  std::function<std::chrono::steady_clock::time_point()> now = [] { return std::chrono::steady_clock::now(); };
  std::function<void(std::chrono::nanoseconds)> sleep = [](std::chrono::nanoseconds d) {
    if (d.count() > 0) std::this_thread::sleep_for(d);
  };
};

// Token bucket with a capacity of one token: consecutive grants are spaced
// at least 1/rate apart, so any window of length w sees at most
// ceil(rate * w) + 1 grants. Thread-safe.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second, TimeSource time = {});
  void acquire();
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  TimeSource time_;
  std::mutex mutex_;
  std::optional<std::chrono::steady_clock::time_point> next_slot_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;
  // Full jitter: the n-th retry sleeps uniformly in [0, base * factor^(n-1)].
  std::chrono::nanoseconds backoff(int retry_number, std::mt19937_64& rng) const;
};

// A literature source. fetch_page validates the request against the
// connector's pagination unit, applies the shared rate limiter and retries
// transient failures (transport, HTTP 429) according to the retry policy.
class Connector {
 public:
  Connector(ConnectorSpec spec, RetryPolicy retry = {}, TimeSource time = {});
  virtual ~Connector() = default;
  Connector(const Connector&) = delete;
  Connector& operator=(const Connector&) = delete;

  const ConnectorSpec& spec() const noexcept { return spec_; }
  Page fetch_page(const PageRequest& request);

  // Total attempts issued against the underlying source (including retries).
  std::size_t attempts() const noexcept { return attempts_.load(); }

 protected:
  virtual Page fetch_once(const PageRequest& request) = 0;

 private:
  void validate(const PageRequest& request) const;

  ConnectorSpec spec_;
  RetryPolicy retry_;
  TimeSource time_;
  std::unique_ptr<RateLimiter> limiter_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
  std::atomic<std::size_t> attempts_{0};
};

// Default capabilities/dialect/rate for each source.
ConnectorSpec default_spec(Source source, ConnectorKind kind);

// Scripted failure modes for fixture connectors.
struct FixtureBehavior {
  // The first N fetch attempts fail with a transport error.
  int transient_failures = 0;
  bool always_fail = false;
  // Called before every attempt (may block; used to hold a harvest mid-run).
  std::function<void(const PageRequest&)> before_fetch;
};

// Deterministic, in-memory stand-in for a literature API. Serves a fixed
// record set (the vendor's result set for the query) in pages; when the
// request carries a year, only records from that year are served.
class FixtureConnector : public Connector {
 public:
  FixtureConnector(ConnectorSpec spec, std::vector<ArticleRecord> records, FixtureBehavior behavior = {},
                   RetryPolicy retry = {}, TimeSource time = {});

  // One JSON object of string fields per line, mapped with
  // from_source_payload. Blank lines are skipped. A missing file yields an
  // empty fixture.
  static std::vector<ArticleRecord> load_file(Source source, const std::filesystem::path& path);

  std::size_t size() const noexcept { return records_.size(); }

 protected:
  Page fetch_once(const PageRequest& request) override;

 private:
  std::vector<ArticleRecord> records_;
  FixtureBehavior behavior_;
  std::atomic<int> failures_left_;
};

// File name of a source's fixture inside a fixtures directory, e.g. "scopus.jsonl".
std::string fixture_file_name(Source source);

struct ConnectorConfig {
  // Environment snapshot consulted for credentials
  // (SCOPUS_API_KEY, SCIENCEDIRECT_API_KEY, WOS_API_KEY, SCHOLAR_EXPORT_PATH).
  std::map<std::string, std::string> env;
  std::optional<std::filesystem::path> fixtures_dir;
  std::string elsevier_base_url = "https://api.elsevier.com";
  std::string clarivate_base_url = "https://api.clarivate.com";
  RetryPolicy retry;
  TimeSource time;

  static ConnectorConfig from_environment();
};

// Live connectors whose credentials are present (Scopus, ScienceDirect,
// WebOfScience, GoogleScholar), followed by one fixture connector per source.
std::vector<ConnectorSpec> list_connectors(const ConnectorConfig& config);

// The connector serving each source for a harvest.
class ConnectorSet {
 public:
  void add(std::shared_ptr<Connector> connector);
  Connector* find(Source source) const;
  std::vector<ConnectorSpec> specs() const;

 private:
  std::map<Source, std::shared_ptr<Connector>> by_source_;
};

// With a fixtures directory every source is fixture-backed; otherwise
// live connectors are used where credentials exist and empty fixtures
// stand in for the rest.
ConnectorSet build_connectors(const ConnectorConfig& config);

}  // namespace litharvest

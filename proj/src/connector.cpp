#include "litharvest/connector.hpp"

#include "litharvest/live_connectors.hpp"
#include "litharvest/text.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace litharvest {

ConnectorError::ConnectorError(Kind kind, const std::string& message, std::string raw_body)
    : std::runtime_error(message), kind_(kind), raw_body_(std::move(raw_body)) {}

std::string_view error_kind_name(ConnectorError::Kind kind) {
  switch (kind) {
    case ConnectorError::Kind::Auth: return "AuthError";
    case ConnectorError::Kind::RateLimited: return "RateLimited";
    case ConnectorError::Kind::Transport: return "TransportError";
    case ConnectorError::Kind::MalformedPayload: return "MalformedPayload";
  }
  return "TransportError";
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_second, TimeSource time)
    : rate_(requests_per_second), time_(std::move(time)) {
  if (!(rate_ > 0.0)) throw std::invalid_argument("rate limit must be positive");
}

void RateLimiter::acquire() {
  using namespace std::chrono;
  const auto interval = duration_cast<steady_clock::duration>(duration<double>(1.0 / rate_));
  steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = time_.now();
    slot = (next_slot_ && *next_slot_ > now) ? *next_slot_ : now;
    next_slot_ = slot + interval;
  }
  const auto now = time_.now();
  if (slot > now) time_.sleep(slot - now);
}

std::chrono::nanoseconds RetryPolicy::backoff(int retry_number, std::mt19937_64& rng) const {
  const double cap = static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(base_delay).count()) *
                     std::pow(factor, std::max(0, retry_number - 1));
  std::uniform_real_distribution<double> dist(0.0, cap);
  return std::chrono::nanoseconds(static_cast<std::int64_t>(dist(rng)));
}

// ---------------------------------------------------------------------------

Connector::Connector(ConnectorSpec spec, RetryPolicy retry, TimeSource time)
    : spec_(std::move(spec)), retry_(retry), time_(std::move(time)), rng_(0x5eed + static_cast<int>(spec_.source)) {
  if (spec_.capabilities.max_records_per_request == 0) {
    throw std::invalid_argument("max_records_per_request must be positive");
  }
  if (spec_.rate_limit > 0.0) limiter_ = std::make_unique<RateLimiter>(spec_.rate_limit, time_);
}

void Connector::validate(const PageRequest& request) const {
  if (request.limit == 0 || request.limit > spec_.capabilities.max_records_per_request) {
    throw std::invalid_argument("page limit must be in [1, " +
                                std::to_string(spec_.capabilities.max_records_per_request) + "]");
  }
  if (spec_.capabilities.pagination_unit == PaginationUnit::Records) {
    if (request.page_index) throw std::invalid_argument("records-paginated source does not accept page_index");
  } else {
    if (request.cursor) throw std::invalid_argument("page-paginated source does not accept a cursor");
    if (!request.page_index) throw std::invalid_argument("page-paginated source requires page_index");
  }
}

Page Connector::fetch_page(const PageRequest& request) {
  validate(request);
  const int max_attempts = std::max(1, retry_.max_attempts);
  for (int attempt = 1;; ++attempt) {
    if (limiter_) limiter_->acquire();
    ++attempts_;
    try {
      return fetch_once(request);
    } catch (const ConnectorError& e) {
      if (!e.retryable() || attempt >= max_attempts) throw;
      std::chrono::nanoseconds delay;
      {
        std::lock_guard lock(rng_mutex_);
        delay = retry_.backoff(attempt, rng_);
      }
      time_.sleep(delay);
    }
  }
}

ConnectorSpec default_spec(Source source, ConnectorKind kind) {
  ConnectorSpec spec;
  spec.source = source;
  spec.kind = kind;
  switch (source) {
    case Source::Scopus:
      spec.capabilities = {true, PaginationUnit::Records, 25};
      spec.rate_limit = 9.0;
      spec.credential_env_names = {"SCOPUS_API_KEY"};
      spec.dialect = QueryDialect::TitleAbsKey;
      break;
    case Source::ScienceDirect:
      spec.capabilities = {true, PaginationUnit::Records, 100};
      spec.rate_limit = 2.0;
      spec.credential_env_names = {"SCIENCEDIRECT_API_KEY"};
      spec.dialect = QueryDialect::Generic;
      break;
    case Source::WebOfScience:
      spec.capabilities = {true, PaginationUnit::Pages, 50};
      spec.rate_limit = 5.0;
      spec.credential_env_names = {"WOS_API_KEY"};
      spec.dialect = QueryDialect::TopicSearch;
      break;
    case Source::GoogleScholar:
      spec.capabilities = {false, PaginationUnit::Records, 20};
      spec.rate_limit = 1.0;
      spec.credential_env_names = {"SCHOLAR_EXPORT_PATH"};
      spec.dialect = QueryDialect::Generic;
      break;
    case Source::Fixture:
      spec.capabilities = {true, PaginationUnit::Records, 100};
      spec.rate_limit = 0.0;
      spec.dialect = QueryDialect::Generic;
      break;
  }
  if (kind == ConnectorKind::Fixture) {
    spec.rate_limit = 0.0;
    spec.credential_env_names.clear();
  }
  return spec;
}

// ---------------------------------------------------------------------------

FixtureConnector::FixtureConnector(ConnectorSpec spec, std::vector<ArticleRecord> records, FixtureBehavior behavior,
                                   RetryPolicy retry, TimeSource time)
    : Connector(std::move(spec), retry, std::move(time)),
      records_(std::move(records)),
      behavior_(std::move(behavior)),
      failures_left_(behavior_.transient_failures) {}

std::vector<ArticleRecord> FixtureConnector::load_file(Source source, const std::filesystem::path& path) {
  std::vector<ArticleRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::trim(line).empty()) continue;
    Payload payload;
    try {
      const auto j = nlohmann::json::parse(line);
      for (const auto& [key, value] : j.items()) {
        payload[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConnectorError(ConnectorError::Kind::MalformedPayload,
                           path.string() + ":" + std::to_string(line_number) + ": " + e.what(), line);
    }
    out.push_back(from_source_payload(source, payload));
  }
  return out;
}

Page FixtureConnector::fetch_once(const PageRequest& request) {
  if (behavior_.before_fetch) behavior_.before_fetch(request);
  if (behavior_.always_fail) {
    throw ConnectorError(ConnectorError::Kind::Transport, "fixture scripted to fail");
  }
  if (failures_left_.load() > 0 && failures_left_.fetch_sub(1) > 0) {
    throw ConnectorError(ConnectorError::Kind::Transport, "fixture scripted transient failure");
  }

  std::vector<const ArticleRecord*> visible;
  visible.reserve(records_.size());
  for (const auto& r : records_) {
    if (!request.year || r.year() == request.year) visible.push_back(&r);
  }

  std::size_t offset = 0;
  if (request.page_index) {
    offset = *request.page_index * request.limit;
  } else if (request.cursor) {
    try {
      offset = std::stoul(*request.cursor);
    } catch (const std::exception&) {
      throw ConnectorError(ConnectorError::Kind::MalformedPayload, "bad fixture cursor", *request.cursor);
    }
  }

  Page page;
  page.total_available = visible.size();
  const std::size_t end = std::min(visible.size(), offset + request.limit);
  for (std::size_t i = offset; i < end; ++i) page.records.push_back(*visible[i]);
  if (end < visible.size()) {
    page.next = request.page_index ? std::to_string(*request.page_index + 1) : std::to_string(end);
  }
  return page;
}

std::string fixture_file_name(Source source) { return std::string(source_key(source)) + ".jsonl"; }

// ---------------------------------------------------------------------------

ConnectorConfig ConnectorConfig::from_environment() {
  ConnectorConfig config;
  for (const char* name : {"SCOPUS_API_KEY", "SCIENCEDIRECT_API_KEY", "WOS_API_KEY", "SCHOLAR_EXPORT_PATH",
                           "ELSEVIER_BASE_URL", "CLARIVATE_BASE_URL"}) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') config.env[name] = v;
  }
  if (auto it = config.env.find("ELSEVIER_BASE_URL"); it != config.env.end()) config.elsevier_base_url = it->second;
  if (auto it = config.env.find("CLARIVATE_BASE_URL"); it != config.env.end()) config.clarivate_base_url = it->second;
  return config;
}

namespace {

bool has_credentials(const ConnectorConfig& config, const ConnectorSpec& spec) {
  if (spec.credential_env_names.empty()) return false;
  for (const auto& name : spec.credential_env_names) {
    auto it = config.env.find(name);
    if (it == config.env.end() || it->second.empty()) return false;
  }
  return true;
}

constexpr Source kLiveSources[] = {Source::Scopus, Source::ScienceDirect, Source::WebOfScience,
                                   Source::GoogleScholar};

}  // namespace

std::vector<ConnectorSpec> list_connectors(const ConnectorConfig& config) {
  std::vector<ConnectorSpec> out;
  for (Source s : kLiveSources) {
    auto spec = default_spec(s, ConnectorKind::Live);
    if (has_credentials(config, spec)) out.push_back(std::move(spec));
  }
  for (Source s : kAllSources) out.push_back(default_spec(s, ConnectorKind::Fixture));
  return out;
}

void ConnectorSet::add(std::shared_ptr<Connector> connector) {
  const Source s = connector->spec().source;
  by_source_[s] = std::move(connector);
}

Connector* ConnectorSet::find(Source source) const {
  auto it = by_source_.find(source);
  return it == by_source_.end() ? nullptr : it->second.get();
}

std::vector<ConnectorSpec> ConnectorSet::specs() const {
  std::vector<ConnectorSpec> out;
  for (const auto& [source, connector] : by_source_) out.push_back(connector->spec());
  return out;
}

ConnectorSet build_connectors(const ConnectorConfig& config) {
  ConnectorSet set;
  for (Source s : kAllSources) {
    if (!config.fixtures_dir) {
      const auto live = default_spec(s, ConnectorKind::Live);
      if (s != Source::Fixture && has_credentials(config, live)) {
        set.add(make_live_connector(s, config));
        continue;
      }
    }
    std::vector<ArticleRecord> records;
    if (config.fixtures_dir) records = FixtureConnector::load_file(s, *config.fixtures_dir / fixture_file_name(s));
    set.add(std::make_shared<FixtureConnector>(default_spec(s, ConnectorKind::Fixture), std::move(records),
                                               FixtureBehavior{}, config.retry, config.time));
  }
  return set;
}

}  // namespace litharvest

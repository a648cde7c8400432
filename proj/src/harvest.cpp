#include "litharvest/harvest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <thread>

namespace litharvest {

std::string_view status_name(JobStatus status) {
  switch (status) {
    case JobStatus::Pending: return "Pending";
    case JobStatus::Collecting: return "Collecting";
    case JobStatus::Filtering: return "Filtering";
    case JobStatus::Classifying: return "Classifying";
    case JobStatus::Done: return "Done";
    case JobStatus::Failed: return "Failed";
  }
  return "Failed";
}

std::optional<JobStatus> parse_status(std::string_view name) {
  for (auto s : {JobStatus::Pending, JobStatus::Collecting, JobStatus::Filtering, JobStatus::Classifying,
                 JobStatus::Done, JobStatus::Failed}) {
    if (status_name(s) == name) return s;
  }
  return std::nullopt;
}

bool can_transition(JobStatus from, JobStatus to) {
  if (from == JobStatus::Done || from == JobStatus::Failed) return false;
  if (to == JobStatus::Failed) return true;
  return static_cast<int>(to) == static_cast<int>(from) + 1;
}

void HarvestJob::advance(JobStatus next) {
  if (!can_transition(status, next)) {
    throw std::logic_error("invalid job status transition " + std::string(status_name(status)) + " -> " +
                           std::string(status_name(next)));
  }
  status = next;
}

std::map<Source, SourceSettings> default_source_settings() {
  return {
      {Source::Scopus, {true, kMaxRecordsPerSource, 0}},
      {Source::ScienceDirect, {true, kMaxRecordsPerSource, 0}},
      {Source::WebOfScience, {true, 0, 10}},
      {Source::GoogleScholar, {false, 1000, 0}},
      {Source::Fixture, {false, kMaxRecordsPerSource, 0}},
  };
}

namespace {

std::string join_errors(const std::vector<FieldError>& errors) {
  std::string out = "validation failed";
  for (const auto& e : errors) out += "; " + e.field + ": " + e.message;
  return out;
}

std::string limit_field(Source s) {
  return std::string(source_key(s)) + (s == Source::WebOfScience ? ".pages" : ".max");
}

}  // namespace

ValidationError::ValidationError(std::vector<FieldError> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  std::tm tm{};
  int millis = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                  &tm.tm_min, &tm.tm_sec, &millis) != 7) {
    return std::nullopt;
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::time_t secs = timegm(&tm);
  return Timestamp(std::chrono::seconds(secs)) + std::chrono::milliseconds(millis);
}

bool valid_alias(std::string_view alias) {
  if (alias.empty() || alias.size() > 64 || alias.front() == '.') return false;
  return std::all_of(alias.begin(), alias.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
           c == '.';
  });
}

std::vector<FieldError> field_errors(std::string_view alias, const std::map<Source, SourceSettings>& sources,
                                     const std::optional<YearRange>& year_range) {
  std::vector<FieldError> errors;
  if (!valid_alias(alias)) {
    errors.push_back({"alias", "alias must be 1-64 characters of [A-Za-z0-9._-] and not start with '.'"});
  }
  for (const auto& [source, settings] : sources) {
    if (!settings.enabled) continue;
    if (source == Source::WebOfScience) {
      if (settings.page_count > kMaxWosPages) {
        errors.push_back({limit_field(source), "page count must be between 0 and 100"});
      }
    } else if (settings.record_limit < 1 || settings.record_limit > kMaxRecordsPerSource) {
      errors.push_back({limit_field(source), "record limit must be between 1 and 5000"});
    }
  }
  if (year_range) {
    const int max_year = current_year() + 1;
    if (!valid_year(year_range->from)) {
      errors.push_back({"year_from", "year must be between 1800 and " + std::to_string(max_year)});
    }
    if (!valid_year(year_range->to)) {
      errors.push_back({"year_to", "year must be between 1800 and " + std::to_string(max_year)});
    } else if (year_range->to < year_range->from) {
      errors.push_back({"year_to", "year_to must not be earlier than year_from"});
    }
  }
  return errors;
}

void validate(const HarvestJob& job) {
  auto errors = field_errors(job.alias, job.sources, job.year_range);
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

std::string with_year_clause(std::string rendered, QueryDialect dialect, int year) {
  switch (dialect) {
    case QueryDialect::TitleAbsKey:
      return rendered + " AND PUBYEAR = " + std::to_string(year);
    case QueryDialect::TopicSearch:
      return rendered + " AND PY=" + std::to_string(year);
    case QueryDialect::Generic:
      break;
  }
  return rendered;
}

PageRequest RequestStream::first_request() const {
  PageRequest r;
  r.query = query;
  r.year = year;
  r.limit = page_size;
  if (unit == PaginationUnit::Records) {
    r.limit = std::min(page_size, cap);
  } else {
    r.page_index = 0;
  }
  return r;
}

HarvestPlan plan_requests(const HarvestJob& job, const ConnectorSet& connectors) {
  validate(job);
  HarvestPlan plan;
  for (const auto& [source, settings] : job.sources) {
    if (!settings.enabled) continue;
    const Connector* connector = connectors.find(source);
    if (connector == nullptr) {
      throw ValidationError(std::vector<FieldError>{{limit_field(source), "no connector configured for " + std::string(source_name(source))}});
    }
    const ConnectorSpec& spec = connector->spec();
    const auto unit = spec.capabilities.pagination_unit;
    const std::size_t page_size = spec.capabilities.max_records_per_request;

    std::size_t source_cap = settings.record_limit;
    std::optional<std::size_t> max_pages;
    if (unit == PaginationUnit::Pages) {
      if (settings.page_count == 0) continue;
      source_cap = settings.page_count * page_size;
      max_pages = settings.page_count;
    }

    const std::string rendered = render_query(job.query, spec.dialect);
    auto& streams = plan[source];
    auto make_stream = [&](std::optional<int> year, std::size_t cap) {
      RequestStream s;
      s.source = source;
      s.year = year;
      s.query = year ? with_year_clause(rendered, spec.dialect, *year) : rendered;
      s.unit = unit;
      s.page_size = page_size;
      s.cap = cap;
      s.max_pages = max_pages;
      return s;
    };
    if (job.year_range) {
      for (int y = job.year_range->from; y <= job.year_range->to; ++y) {
        streams.push_back(make_stream(y, std::min(source_cap, kMaxRecordsPerYear)));
      }
    } else {
      streams.push_back(make_stream(std::nullopt, source_cap));
    }
  }
  return plan;
}

HarvestFailed::HarvestFailed(const std::string& message, std::vector<std::string> warnings)
    : std::runtime_error(message), warnings_(std::move(warnings)) {}

namespace {

struct StreamOutcome {
  std::vector<ArticleRecord> records;
  std::vector<std::string> warnings;
  bool failed = false;
};

std::string stream_label(const RequestStream& s) {
  std::string label(source_name(s.source));
  if (s.year) label += " (" + std::to_string(*s.year) + ")";
  return label;
}

}  // namespace

HarvestResult run_harvest(const HarvestJob& job, const ConnectorSet& connectors, const HarvestOptions& options) {
  if (options.concurrency_limit == 0) throw std::invalid_argument("concurrency limit must be positive");
  const HarvestPlan plan = plan_requests(job, connectors);

  std::vector<const RequestStream*> streams;
  for (const auto& [source, list] : plan) {
    for (const auto& s : list) streams.push_back(&s);
  }

  std::vector<StreamOutcome> outcomes(streams.size());
  std::map<Source, std::atomic<std::size_t>> totals;
  for (const auto& [source, list] : plan) totals[source] = 0;
  std::mutex progress_mutex;

  auto run_stream = [&](std::size_t index) {
    const RequestStream& stream = *streams[index];
    StreamOutcome& out = outcomes[index];
    Connector& connector = *connectors.find(stream.source);
    PageRequest request = stream.first_request();
    std::size_t page_number = 0;
    try {
      while (out.records.size() < stream.cap) {
        if (stream.max_pages && page_number >= *stream.max_pages) break;
        Page page = connector.fetch_page(request);
        ++page_number;
        for (const auto& raw : page.rejected) {
          out.warnings.push_back(stream_label(stream) + ": rejected payload " + raw);
        }
        const std::size_t room = stream.cap - out.records.size();
        if (page.records.size() > room) page.records.erase(page.records.begin() + static_cast<std::ptrdiff_t>(room), page.records.end());
        const std::size_t got = page.records.size();
        std::move(page.records.begin(), page.records.end(), std::back_inserter(out.records));
        const std::size_t total = totals.at(stream.source) += got;
        if (options.on_progress) {
          std::lock_guard lock(progress_mutex);
          options.on_progress({stream.source, stream.year, page_number, got, total});
        }
        if (!page.next) break;
        if (stream.unit == PaginationUnit::Records) {
          request.cursor = page.next;
          request.limit = std::min(stream.page_size, stream.cap - out.records.size());
          if (request.limit == 0) break;
        } else {
          request.page_index = *request.page_index + 1;
        }
      }
    } catch (const ConnectorError& e) {
      out.failed = true;
      std::string msg = stream_label(stream) + " failed after " + std::to_string(out.records.size()) +
                        " records: " + std::string(error_kind_name(e.kind())) + ": " + e.what();
      if (!e.raw_body().empty()) msg += " [body: " + e.raw_body().substr(0, 512) + "]";
      out.warnings.push_back(std::move(msg));
    } catch (const std::exception& e) {
      out.failed = true;
      out.warnings.push_back(stream_label(stream) + " failed: " + e.what());
    }
  };

  std::atomic<std::size_t> next_stream{0};
  {
    const std::size_t workers = std::min(options.concurrency_limit, streams.size());
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next_stream++; i < streams.size(); i = next_stream++) run_stream(i);
      });
    }
  }

  HarvestResult result;
  std::map<Source, std::pair<std::size_t, std::size_t>> failures;  // failed streams, total streams
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const Source s = streams[i]->source;
    auto& outcome = outcomes[i];
    result.counts[s] += outcome.records.size();
    auto& f = failures[s];
    ++f.second;
    if (outcome.failed) ++f.first;
    for (auto& w : outcome.warnings) {
      spdlog::warn("[{}] {}", job.alias, w);
      result.warnings.push_back(std::move(w));
    }
    std::move(outcome.records.begin(), outcome.records.end(), std::back_inserter(result.records));
  }
  for (const auto& [source, f] : failures) {
    if (f.first == f.second) result.failed_sources.push_back(source);
  }
  if (!failures.empty() && result.failed_sources.size() == failures.size()) {
    throw HarvestFailed("every enabled source failed", result.warnings);
  }
  return result;
}

}  // namespace litharvest

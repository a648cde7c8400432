#include "litharvest/live_connectors.hpp"

#include "litharvest/text.hpp"

#include <httplib.h>

namespace litharvest {
namespace {

using Kind = ConnectorError::Kind;

std::string join_names(const nlohmann::json& arr, std::initializer_list<const char*> name_keys) {
  std::string out;
  for (const auto& item : arr) {
    std::string name;
    if (item.is_string()) {
      name = item.get<std::string>();
    } else if (item.is_object()) {
      for (const char* key : name_keys) {
        if (auto it = item.find(key); it != item.end() && it->is_string()) {
          name = it->get<std::string>();
          break;
        }
      }
    }
    if (name.empty()) continue;
    if (!out.empty()) out += "; ";
    out += name;
  }
  return out;
}

void flatten_into(const nlohmann::json& node, const std::string& prefix, Payload& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_null()) continue;
    if (value.is_string()) {
      out[path] = value.get<std::string>();
    } else if (value.is_object()) {
      flatten_into(value, path, out);
    } else if (value.is_array()) {
      if (key == "author") {
        out["authors"] = join_names(value, {"authname", "ce:indexed-name", "given-name"});
      } else if (key == "authors") {
        out[path] = join_names(value, {"displayName", "wosStandard", "authname", "name"});
      } else {
        out[path] = value.dump();
      }
    } else {
      out[path] = value.dump();
    }
  }
}

[[noreturn]] void throw_http(const httplib::Result& res, const std::string& what) {
  if (!res) {
    throw ConnectorError(Kind::Transport, what + ": " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 401 || status == 403) throw ConnectorError(Kind::Auth, what + ": HTTP " + std::to_string(status), res->body);
  if (status == 429) throw ConnectorError(Kind::RateLimited, what + ": HTTP 429", res->body);
  throw ConnectorError(Kind::Transport, what + ": HTTP " + std::to_string(status), res->body);
}

httplib::Result http_get(const std::string& base_url, const std::string& path, const httplib::Params& params,
                         const httplib::Headers& headers) {
  httplib::Client client(base_url);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  return client.Get(path, params, headers);
}

nlohmann::json parse_body(const std::string& body, const std::string& what) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ConnectorError(Kind::MalformedPayload, what + ": " + e.what(), body);
  }
}

std::size_t to_count(const nlohmann::json& v) {
  if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::size_t>();
  if (v.is_string()) return static_cast<std::size_t>(std::stoull(v.get<std::string>()));
  throw std::invalid_argument("not a count");
}

void map_entries(Source source, const nlohmann::json& entries, Page& page) {
  for (const auto& entry : entries) {
    if (!entry.is_object() || entry.contains("error")) continue;
    try {
      page.records.push_back(from_source_payload(source, flatten_entry(entry)));
    } catch (const RecordError&) {
      page.rejected.push_back(entry.dump());
    }
  }
}

}  // namespace

Payload flatten_entry(const nlohmann::json& entry) {
  Payload out;
  flatten_into(entry, "", out);
  return out;
}

ElsevierConnector::ElsevierConnector(Source source, std::string base_url, std::string api_key, RetryPolicy retry,
                                     TimeSource time)
    : Connector(default_spec(source, ConnectorKind::Live), retry, std::move(time)),
      base_url_(std::move(base_url)),
      api_key_(std::move(api_key)) {
  if (source != Source::Scopus && source != Source::ScienceDirect) {
    throw std::invalid_argument("Elsevier connector serves Scopus or ScienceDirect only");
  }
}

Page ElsevierConnector::fetch_once(const PageRequest& request) {
  const bool scopus = spec().source == Source::Scopus;
  const std::string what = std::string(source_name(spec().source)) + " search";
  const std::size_t start = request.cursor ? std::stoul(*request.cursor) : 0;

  httplib::Params params{{"query", request.query},
                         {"start", std::to_string(start)},
                         {"count", std::to_string(request.limit)}};
  if (scopus) params.emplace("view", "COMPLETE");
  if (!scopus && request.year) params.emplace("date", std::to_string(*request.year));
  const httplib::Headers headers{{"X-ELS-APIKey", api_key_}, {"Accept", "application/json"}};

  auto res = http_get(base_url_, scopus ? "/content/search/scopus" : "/content/search/sciencedirect", params, headers);
  if (!res || res->status != 200) throw_http(res, what);

  const auto body = parse_body(res->body, what);
  Page page;
  try {
    const auto& results = body.at("search-results");
    const std::size_t total = to_count(results.at("opensearch:totalResults"));
    page.total_available = total;
    std::size_t returned = 0;
    if (auto it = results.find("entry"); it != results.end() && it->is_array()) {
      map_entries(spec().source, *it, page);
      for (const auto& e : *it) returned += e.contains("error") ? 0 : 1;
    }
    if (returned > 0 && start + returned < total) page.next = std::to_string(start + returned);
  } catch (const nlohmann::json::exception& e) {
    throw ConnectorError(Kind::MalformedPayload, what + ": unexpected response shape: " + e.what(), res->body);
  } catch (const std::invalid_argument& e) {
    throw ConnectorError(Kind::MalformedPayload, what + ": unexpected response shape: " + e.what(), res->body);
  }
  return page;
}

WosConnector::WosConnector(std::string base_url, std::string api_key, RetryPolicy retry, TimeSource time)
    : Connector(default_spec(Source::WebOfScience, ConnectorKind::Live), retry, std::move(time)),
      base_url_(std::move(base_url)),
      api_key_(std::move(api_key)) {}

Page WosConnector::fetch_once(const PageRequest& request) {
  const std::string what = "WebOfScience search";
  const std::size_t page_number = *request.page_index + 1;
  const httplib::Params params{{"q", request.query},
                               {"limit", std::to_string(request.limit)},
                               {"page", std::to_string(page_number)},
                               {"db", "WOS"}};
  const httplib::Headers headers{{"X-ApiKey", api_key_}, {"Accept", "application/json"}};

  auto res = http_get(base_url_, "/apis/wos-starter/v1/documents", params, headers);
  if (!res || res->status != 200) throw_http(res, what);

  const auto body = parse_body(res->body, what);
  Page page;
  try {
    const std::size_t total = to_count(body.at("metadata").at("total"));
    page.total_available = total;
    const auto& hits = body.at("hits");
    map_entries(Source::WebOfScience, hits, page);
    if (!hits.empty() && page_number * request.limit < total) page.next = std::to_string(page_number);
  } catch (const nlohmann::json::exception& e) {
    throw ConnectorError(Kind::MalformedPayload, what + ": unexpected response shape: " + e.what(), res->body);
  } catch (const std::invalid_argument& e) {
    throw ConnectorError(Kind::MalformedPayload, what + ": unexpected response shape: " + e.what(), res->body);
  }
  return page;
}

std::shared_ptr<Connector> make_live_connector(Source source, const ConnectorConfig& config) {
  auto env = [&](const char* name) {
    auto it = config.env.find(name);
    return it == config.env.end() ? std::string{} : it->second;
  };
  switch (source) {
    case Source::Scopus:
      return std::make_shared<ElsevierConnector>(source, config.elsevier_base_url, env("SCOPUS_API_KEY"), config.retry,
                                                 config.time);
    case Source::ScienceDirect:
      return std::make_shared<ElsevierConnector>(source, config.elsevier_base_url, env("SCIENCEDIRECT_API_KEY"),
                                                 config.retry, config.time);
    case Source::WebOfScience:
      return std::make_shared<WosConnector>(config.clarivate_base_url, env("WOS_API_KEY"), config.retry, config.time);
    case Source::GoogleScholar: {
      // No live scraping: the Scholar source is a user-supplied export file.
      auto records = FixtureConnector::load_file(source, env("SCHOLAR_EXPORT_PATH"));
      auto spec = default_spec(source, ConnectorKind::Live);
      spec.rate_limit = 0.0;
      return std::make_shared<FixtureConnector>(std::move(spec), std::move(records),
                                                FixtureBehavior{}, config.retry, config.time);
    }
    case Source::Fixture:
      break;
  }
  throw std::invalid_argument("no live connector for source " + std::string(source_name(source)));
}

}  // namespace litharvest

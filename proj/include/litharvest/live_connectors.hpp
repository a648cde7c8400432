#pragma once

#include "litharvest/connector.hpp"

#include <json.hpp>

#include <memory>
#include <string>

namespace litharvest {

// Thin adapters over the vendor search APIs. They are inert unless the
// matching credential is configured; the base URL is injectable so the
// adapters can be exercised against a local recording server.

// Elsevier search API (Scopus and ScienceDirect share the response shape):
//   GET {base}/content/search/{scopus|sciencedirect}?query=..&start=..&count=..
//   header X-ELS-APIKey
class ElsevierConnector : public Connector {
 public:
  ElsevierConnector(Source source, std::string base_url, std::string api_key, RetryPolicy retry = {},
                    TimeSource time = {});

 protected:
  Page fetch_once(const PageRequest& request) override;

 private:
  std::string base_url_;
  std::string api_key_;
};

// Web of Science Starter API:
//   GET {base}/apis/wos-starter/v1/documents?q=..&limit=..&page=<1-based>
//   header X-ApiKey
class WosConnector : public Connector {
 public:
  WosConnector(std::string base_url, std::string api_key, RetryPolicy retry = {}, TimeSource time = {});

 protected:
  Page fetch_once(const PageRequest& request) override;

 private:
  std::string base_url_;
  std::string api_key_;
};

// Flattens one search-result entry into a string payload: nested object keys
// are joined with '.', author arrays become "; "-joined names, other arrays
// and non-string scalars are kept as compact JSON text.
Payload flatten_entry(const nlohmann::json& entry);

std::shared_ptr<Connector> make_live_connector(Source source, const ConnectorConfig& config);

}  // namespace litharvest

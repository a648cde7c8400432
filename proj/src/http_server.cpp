#include "litharvest/http_server.hpp"

#include "litharvest/csv.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace litharvest {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                const nlohmann::json& fields = nlohmann::json::object()) {
  send_json(res, status, {{"code", code}, {"message", message}, {"fields", fields}});
}

template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "invalid_json", e.what());
  } catch (const ValidationError& e) {
    nlohmann::json fields = nlohmann::json::object();
    for (const auto& f : e.errors()) fields[f.field] = f.message;
    send_error(res, 400, "validation_failed", e.what(), fields);
  } catch (const AliasConflict& e) {
    send_error(res, 409, "alias_conflict", e.what());
  } catch (const JobNotFound& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const JobNotReady& e) {
    send_error(res, 409, "not_ready", e.what());
  } catch (const csv::CsvError& e) {
    send_error(res, 400, "invalid_csv", e.what());
  } catch (const std::invalid_argument& e) {
    send_error(res, 400, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    spdlog::error("request failed: {}", e.what());
    send_error(res, 500, "internal_error", e.what());
  }
}

}  // namespace

HttpServer::HttpServer(JobService& service, std::string cors_origin)
    : service_(service), cors_origin_(std::move(cors_origin)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::serve() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::install_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", cors_origin_},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      const auto alias = service_.submit(JobSubmission::from_json(body));
      send_json(res, 201, {{"alias", alias}});
    });
  });

  srv.Get("/api/jobs", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service_.list_jobs()); });
  });

  srv.Get("/api/jobs/:alias", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service_.job_status(req.path_params.at("alias"))); });
  });

  srv.Get("/api/jobs/:alias/download", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& alias = req.path_params.at("alias");
      res.set_content(service_.download(alias), "text/csv; charset=utf-8");
      res.set_header("Content-Disposition", "attachment; filename=\"" + alias + ".csv\"");
      res.status = 200;
    });
  });

  srv.Post("/api/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      std::vector<FieldError> errors;
      if (!body.is_object() || !body.contains("alias") || !body["alias"].is_string()) {
        errors.push_back({"alias", "alias is required"});
      }
      if (!body.is_object() || !body.contains("human_csv") || !body["human_csv"].is_string()) {
        errors.push_back({"human_csv", "human_csv is required"});
      }
      if (!errors.empty()) throw ValidationError(std::move(errors));
      const auto report = service_.evaluate(body["alias"].get<std::string>(), body["human_csv"].get<std::string>());
      send_json(res, 200, to_json(report));
    });
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "error", httplib::status_message(res.status));
    }
  });
}

}  // namespace litharvest

#pragma once

#include "litharvest/service.hpp"

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace litharvest {

// HTTP facade over JobService. All endpoints live under /api and exchange
// JSON; errors carry {"code", "message"} plus "fields" for validation.
//   POST /api/jobs                  -> 201 {"alias"} | 400 | 409
//   GET  /api/jobs                  -> {"jobs": [...]}
//   GET  /api/jobs/{alias}          -> status document | 404
//   GET  /api/jobs/{alias}/download -> text/csv attachment | 404 | 409
//   POST /api/evaluate              -> evaluation report | 400 | 404 | 409
class HttpServer {
 public:
  HttpServer(JobService& service, std::string cors_origin = "*");
  ~HttpServer();

  // Binds to host:port (port 0 picks a free port) and returns the port, or
  // -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  bool serve();
  void stop();

 private:
  void install_routes();

  JobService& service_;
  std::string cors_origin_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace litharvest

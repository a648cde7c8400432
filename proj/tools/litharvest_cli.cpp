#include "litharvest/http_server.hpp"
#include "litharvest/service.hpp"
#include "litharvest/text.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace litharvest;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Common {
  std::string data_dir = env_or("DATA_DIR", "data");
  std::string fixtures_dir;
  std::string gen_endpoint = env_or("GEN_ENDPOINT", "");
  std::size_t jobs = 2;

  ServiceConfig config() const {
    ServiceConfig c;
    c.data_dir = data_dir;
    c.connectors = ConnectorConfig::from_environment();
    if (!fixtures_dir.empty()) c.connectors.fixtures_dir = fixtures_dir;
    if (!gen_endpoint.empty()) c.gen_endpoint = gen_endpoint;
    c.max_concurrent_jobs = jobs;
    return c;
  }
};

struct HarvestArgs {
  std::string alias;
  std::string query;
  std::vector<std::string> sources;
  std::map<std::string, int> limits;
  std::optional<int> year_from;
  std::optional<int> year_to;
};

nlohmann::json submission_body(const HarvestArgs& a) {
  nlohmann::json body{{"alias", a.alias}, {"query", a.query}};
  if (!a.sources.empty()) {
    for (Source s : kAllSources) body[std::string(source_key(s))]["enabled"] = false;
    for (const auto& name : a.sources) {
      auto s = parse_source(name);
      if (!s) throw std::invalid_argument("unknown source: " + name);
      body[std::string(source_key(*s))]["enabled"] = true;
    }
  }
  for (const auto& [key, value] : a.limits) {
    if (key == "wos") body[key]["pages"] = value;
    else body[key]["max"] = value;
  }
  if (a.year_from) body["year_from"] = *a.year_from;
  if (a.year_to) body["year_to"] = *a.year_to;
  return body;
}

void print_status(const nlohmann::json& status) {
  std::cout << "job " << status.value("alias", "") << ": " << status.value("status", "") << '\n';
  for (const auto& [source, n] : status["counters"].items()) std::cout << "  " << source << ": " << n << '\n';
  if (status.contains("warnings")) {
    for (const auto& w : status["warnings"]) std::cout << "  warning: " << w.get<std::string>() << '\n';
  }
}

std::map<Source, std::size_t> harvested_counts(const JobManifest& m) { return m.source_counts; }

int run_harvest_cmd(const Common& common, const HarvestArgs& args) {
  JobService service(common.config());
  const auto alias = service.submit(JobSubmission::from_json(submission_body(args)));
  service.run(alias);
  const StoredJob job = service.store().load(alias);
  print_status(service.job_status(alias));
  if (job.manifest.dedup) std::cout << format_report(*job.manifest.dedup, harvested_counts(job.manifest));
  std::size_t relevant = 0;
  for (const auto& c : job.classifications) relevant += c.label == Label::Relevant;
  if (job.manifest.status == JobStatus::Done) {
    std::cout << "classified " << job.classifications.size() << " records, " << relevant << " relevant ("
              << job.manifest.model_id << ")\n";
    return 0;
  }
  return 1;
}

int run_filter_cmd(const Common& common, const std::string& job, const std::string& input, const std::string& output,
                   bool url_stage) {
  if (!input.empty()) {
    std::vector<ArticleRecord> records;
    std::istringstream in(read_file(input));
    for (std::string line; std::getline(in, line);) {
      if (!text::trim(line).empty()) records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    std::map<Source, std::size_t> counts;
    for (const auto& r : records) ++counts[r.source];
    PipelineOptions options;
    options.url_stage = url_stage;
    PipelineResult result = run_pipeline(std::move(records), options);
    std::cout << format_report(result.report, counts);
    if (!output.empty()) {
      std::string out;
      for (const auto& r : result.records) out += to_json(r).dump() + '\n';
      write_file_atomic(output, out);
    }
    return 0;
  }
  JobStore store(common.data_dir);
  const JobManifest m = store.load_manifest(job);
  if (!m.dedup) {
    std::cerr << "job " << job << " has no filter report (status " << status_name(m.status) << ")\n";
    return 1;
  }
  std::cout << format_report(*m.dedup, m.source_counts);
  return 0;
}

int run_classify_cmd(const Common& common, const std::string& alias) {
  const ServiceConfig config = common.config();
  JobStore store(config.data_dir);
  StoredJob job = store.load(alias);
  if (job.manifest.status != JobStatus::Done) throw JobNotReady(alias, job.manifest.status);
  const QueryExpr query = parse_query(job.manifest.query);
  std::unique_ptr<GenerationBackend> backend;
  if (config.gen_endpoint) backend = std::make_unique<HttpGenerationBackend>(*config.gen_endpoint);
  else backend = std::make_unique<StubBackend>(query);
  auto results = classify_batch(job.records, query, *backend, config.generation, config.classify);
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& r : results) ++counts[static_cast<int>(r.label)];
  if (!results.empty()) job.manifest.model_id = results.front().model_id;
  store.save(job.manifest, job.records, results, job.reports);
  std::cout << "Relevant " << counts[0] << ", Irrelevant " << counts[1] << ", Unknown " << counts[2] << " ("
            << job.manifest.model_id << ")\n";
  return 0;
}

int run_evaluate_cmd(const Common& common, const std::string& alias, const std::string& human, bool json) {
  JobService service(common.config());
  const EvaluationReport report = service.evaluate(alias, read_file(human));
  if (json) {
    std::cout << to_json(report).dump(2) << '\n';
  } else {
    std::cout << format_evaluation(report, service.store().load_manifest(alias).model_id);
  }
  return 0;
}

int run_export_cmd(const Common& common, const std::string& alias, const std::string& output) {
  JobService service(common.config());
  const std::string csv = service.download(alias);
  if (output.empty() || output == "-") std::cout << csv;
  else write_file_atomic(output, csv);
  return 0;
}

HttpServer* g_server = nullptr;

int run_serve_cmd(const Common& common, const std::string& host, int port) {
  JobService service(common.config());
  service.start();
  HttpServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    spdlog::error("cannot listen on {}:{}", host, port);
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  spdlog::info("listening on {}:{} (data in {})", host, bound, common.data_dir);
  server.serve();
  g_server = nullptr;
  service.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harvest, clean, screen and export scholarly article metadata"};
  app.require_subcommand();
  app.fallthrough();
  Common common;
  app.add_option("--data-dir", common.data_dir, "Job store directory (DATA_DIR)");
  app.add_option("--fixtures-dir", common.fixtures_dir, "Serve every source from JSONL fixtures in this directory");
  app.add_option("--gen-endpoint", common.gen_endpoint, "Text-generation endpoint (GEN_ENDPOINT); stub rule if unset");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  HarvestArgs hargs;
  auto* harvest = app.add_subcommand("harvest", "Collect, filter and classify a new job");
  harvest->add_option("--alias", hargs.alias, "Job alias")->required();
  harvest->add_option("--query", hargs.query, "Boolean keyword query")->required();
  harvest->add_option("--sources", hargs.sources, "Enabled sources (scopus, sciencedirect, wos, gscholar, fixture)")
      ->delimiter(',');
  for (const char* key : {"scopus", "sciencedirect", "gscholar", "fixture"}) {
    harvest->add_option_function<int>(std::string("--") + key + "-max",
                                      [&hargs, key](int v) { hargs.limits[key] = v; }, "Record limit");
  }
  harvest->add_option_function<int>("--wos-pages", [&hargs](int v) { hargs.limits["wos"] = v; }, "Page count");
  harvest->add_option("--year-from", hargs.year_from);
  harvest->add_option("--year-to", hargs.year_to);

  std::string job, input, output, human;
  bool url_stage = false, json = false;
  auto* filter = app.add_subcommand("filter", "Print a job's cleaning report, or clean a JSONL record file");
  auto* fjob = filter->add_option("--job", job, "Job alias");
  filter->add_option("--input", input, "JSONL records to clean")->excludes(fjob);
  filter->add_option("--output", output, "Write cleaned records as JSONL");
  filter->add_flag("--url-stage", url_stage, "Also deduplicate by URL");

  auto* classify = app.add_subcommand("classify", "Re-run relevance screening for a finished job");
  classify->add_option("--job", job, "Job alias")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Compare a job's screening with a human relevance list");
  evaluate->add_option("--job", job, "Job alias")->required();
  evaluate->add_option("--human", human, "CSV with doi,title columns")->required()->check(CLI::ExistingFile);
  evaluate->add_flag("--json", json, "Print the report as JSON");

  auto* export_cmd = app.add_subcommand("export", "Write a finished job as CSV");
  export_cmd->add_option("--job", job, "Job alias")->required();
  export_cmd->add_option("-o,--output", output, "Output file (stdout by default)");

  std::string listen = env_or("PORT", "8080");
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--listen", listen, "Listen on [host:]port (PORT)");
  serve->add_option("--jobs", common.jobs, "Concurrent jobs");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  if (serve->parsed()) spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (harvest->parsed()) return run_harvest_cmd(common, hargs);
    if (filter->parsed()) {
      if (job.empty() && input.empty()) throw std::invalid_argument("filter needs --job or --input");
      return run_filter_cmd(common, job, input, output, url_stage);
    }
    if (classify->parsed()) return run_classify_cmd(common, job);
    if (evaluate->parsed()) return run_evaluate_cmd(common, job, human, json);
    if (export_cmd->parsed()) return run_export_cmd(common, job, output);
    if (serve->parsed()) {
      const auto colon = listen.rfind(':');
      const std::string host = colon == std::string::npos ? "0.0.0.0" : listen.substr(0, colon);
      return run_serve_cmd(common, host, std::stoi(colon == std::string::npos ? listen : listen.substr(colon + 1)));
    }
  } catch (const ValidationError& e) {
    for (const auto& f : e.errors()) std::cerr << f.field << ": " << f.message << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "litharvest/store.hpp"

#include "litharvest/csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;

namespace litharvest {

AliasConflict::AliasConflict(const std::string& alias) : std::runtime_error("alias already in use: " + alias) {}
JobNotFound::JobNotFound(const std::string& alias) : std::runtime_error("no such job: " + alias) {}

bool operator==(const JobManifest& a, const JobManifest& b) { return to_json(a) == to_json(b); }

namespace {

nlohmann::json sources_json(const std::map<Source, SourceSettings>& sources) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [source, s] : sources) {
    nlohmann::json entry{{"enabled", s.enabled}};
    if (source == Source::WebOfScience) entry["pages"] = s.page_count;
    else entry["max"] = s.record_limit;
    j[std::string(source_key(source))] = entry;
  }
  return j;
}

std::map<Source, SourceSettings> sources_from_json(const nlohmann::json& j) {
  std::map<Source, SourceSettings> out;
  for (const auto& [key, entry] : j.items()) {
    const auto source = parse_source(key);
    if (!source) throw std::invalid_argument("unknown source " + key);
    SourceSettings s;
    s.enabled = entry.value("enabled", false);
    s.record_limit = entry.value("max", std::size_t{0});
    s.page_count = entry.value("pages", std::size_t{0});
    out[*source] = s;
  }
  return out;
}

nlohmann::json counts_json(const std::map<Source, std::size_t>& counts) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [source, n] : counts) j[std::string(source_name(source))] = n;
  return j;
}

std::map<Source, std::size_t> counts_from_json(const nlohmann::json& j) {
  std::map<Source, std::size_t> out;
  for (const auto& [key, n] : j.items()) {
    if (auto s = parse_source(key)) out[*s] = n.get<std::size_t>();
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreIoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T, typename Fn>
std::string to_jsonl(std::span<const T> items, Fn&& fn) {
  std::string out;
  for (const auto& item : items) {
    out += fn(item).dump();
    out.push_back('\n');
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::string& content, Fn&& fn) {
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) fn(nlohmann::json::parse(line));
  }
}

}  // namespace

nlohmann::json to_json(const JobManifest& m) {
  nlohmann::json j{{"alias", m.alias},
                   {"query", m.query},
                   {"sources", sources_json(m.sources)},
                   {"status", status_name(m.status)},
                   {"template_id", m.template_id},
                   {"model_id", m.model_id},
                   {"created_at", m.created_at},
                   {"finished_at", m.finished_at ? nlohmann::json(*m.finished_at) : nlohmann::json(nullptr)},
                   {"source_counts", counts_json(m.source_counts)},
                   {"dedup", m.dedup ? to_json(*m.dedup) : nlohmann::json(nullptr)},
                   {"warnings", m.warnings},
                   {"files", m.files},
                   {"generation", m.generation}};
  j["year_range"] = m.year_range ? nlohmann::json{{"from", m.year_range->from}, {"to", m.year_range->to}}
                                 : nlohmann::json(nullptr);
  return j;
}

JobManifest manifest_from_json(const nlohmann::json& j) {
  JobManifest m;
  m.alias = j.at("alias").get<std::string>();
  m.query = j.at("query").get<std::string>();
  m.sources = sources_from_json(j.at("sources"));
  if (const auto& yr = j.at("year_range"); !yr.is_null()) m.year_range = YearRange{yr.at("from"), yr.at("to")};
  const auto status = parse_status(j.at("status").get<std::string>());
  if (!status) throw std::invalid_argument("unknown status " + j.at("status").dump());
  m.status = *status;
  m.template_id = j.value("template_id", std::string(kPromptTemplateId));
  m.model_id = j.value("model_id", "");
  m.created_at = j.at("created_at").get<std::string>();
  if (const auto& f = j.at("finished_at"); !f.is_null()) m.finished_at = f.get<std::string>();
  m.source_counts = counts_from_json(j.value("source_counts", nlohmann::json::object()));
  if (auto it = j.find("dedup"); it != j.end() && !it->is_null()) m.dedup = dedup_report_from_json(*it);
  m.warnings = j.value("warnings", std::vector<std::string>{});
  m.files = j.value("files", std::map<std::string, std::string>{});
  m.generation = j.value("generation", std::size_t{0});
  return m;
}

JobManifest make_manifest(const HarvestJob& job) {
  JobManifest m;
  m.alias = job.alias;
  m.query = render_query(job.query);
  m.sources = job.sources;
  m.year_range = job.year_range;
  m.status = job.status;
  m.created_at = format_timestamp(job.created_at);
  if (job.finished_at) m.finished_at = format_timestamp(*job.finished_at);
  m.source_counts = job.counters;
  return m;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp-" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreIoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw StoreIoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw StoreIoError("rename to " + path.string() + " failed: " + ec.message());
  }
}

// ---------------------------------------------------------------------------

JobStore::JobStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path JobStore::job_dir(const std::string& alias) const {
  if (!valid_alias(alias)) throw JobNotFound(alias);
  return root_ / alias;
}

void JobStore::write_manifest(const JobManifest& manifest) const {
  write_file_atomic(job_dir(manifest.alias) / "manifest.json", to_json(manifest).dump(2) + "\n");
}

void JobStore::create(const JobManifest& manifest) {
  if (!valid_alias(manifest.alias)) throw ValidationError(std::vector<FieldError>{{"alias", "invalid alias"}});
  std::lock_guard lock(mutex_);
  std::error_code ec;
  if (!fs::create_directory(job_dir(manifest.alias), ec)) {
    if (ec) throw StoreIoError("cannot create job directory: " + ec.message());
    throw AliasConflict(manifest.alias);
  }
  write_manifest(manifest);
}

void JobStore::save(JobManifest manifest, std::span<const ArticleRecord> records,
                    std::span<const ClassificationResult> classifications, const JobReports& reports) {
  std::lock_guard lock(mutex_);
  const fs::path dir = job_dir(manifest.alias);
  if (!fs::exists(dir / "manifest.json")) throw JobNotFound(manifest.alias);

  const JobManifest previous = manifest_from_json(nlohmann::json::parse(read_file(dir / "manifest.json")));
  const std::size_t generation = previous.generation + 1;
  const std::string suffix = "-" + std::to_string(generation);

  nlohmann::json reports_json{{"source_counts", counts_json(reports.source_counts)},
                              {"dedup", reports.dedup ? to_json(*reports.dedup) : nlohmann::json(nullptr)},
                              {"warnings", reports.warnings},
                              {"evaluation", reports.evaluation}};

  manifest.generation = generation;
  manifest.files = {{"records", "records" + suffix + ".jsonl"},
                    {"classifications", "classifications" + suffix + ".jsonl"},
                    {"reports", "reports" + suffix + ".json"}};
  write_file_atomic(dir / manifest.files["records"],
                    to_jsonl(records, [](const ArticleRecord& r) { return to_json(r); }));
  write_file_atomic(dir / manifest.files["classifications"],
                    to_jsonl(classifications, [](const ClassificationResult& c) { return to_json(c); }));
  write_file_atomic(dir / manifest.files["reports"], reports_json.dump(2) + "\n");
  if (fault_hook_) fault_hook_("data-written");
  write_manifest(manifest);

  for (const auto& [name, file] : previous.files) {
    std::error_code ec;
    fs::remove(dir / file, ec);
  }
}

void JobStore::update_manifest(const JobManifest& manifest) {
  std::lock_guard lock(mutex_);
  const fs::path dir = job_dir(manifest.alias);
  if (!fs::exists(dir / "manifest.json")) throw JobNotFound(manifest.alias);
  const JobManifest previous = manifest_from_json(nlohmann::json::parse(read_file(dir / "manifest.json")));
  JobManifest next = manifest;
  next.files = previous.files;
  next.generation = previous.generation;
  write_manifest(next);
}

bool JobStore::exists(const std::string& alias) const {
  return valid_alias(alias) && fs::exists(root_ / alias / "manifest.json");
}

JobManifest JobStore::load_manifest(const std::string& alias) const {
  const fs::path path = job_dir(alias) / "manifest.json";
  if (!fs::exists(path)) throw JobNotFound(alias);
  try {
    return manifest_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw StoreIoError("corrupt manifest for " + alias + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw StoreIoError("corrupt manifest for " + alias + ": " + e.what());
  }
}

StoredJob JobStore::load(const std::string& alias) const {
  StoredJob job;
  job.manifest = load_manifest(alias);
  const fs::path dir = job_dir(alias);
  try {
    if (auto it = job.manifest.files.find("records"); it != job.manifest.files.end()) {
      for_each_line(read_file(dir / it->second), [&](const nlohmann::json& j) { job.records.push_back(record_from_json(j)); });
    }
    if (auto it = job.manifest.files.find("classifications"); it != job.manifest.files.end()) {
      for_each_line(read_file(dir / it->second),
                    [&](const nlohmann::json& j) { job.classifications.push_back(classification_from_json(j)); });
    }
    if (auto it = job.manifest.files.find("reports"); it != job.manifest.files.end()) {
      const auto j = nlohmann::json::parse(read_file(dir / it->second));
      job.reports.source_counts = counts_from_json(j.value("source_counts", nlohmann::json::object()));
      if (const auto& d = j.at("dedup"); !d.is_null()) job.reports.dedup = dedup_report_from_json(d);
      job.reports.warnings = j.value("warnings", std::vector<std::string>{});
      job.reports.evaluation = j.value("evaluation", nlohmann::json(nullptr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw StoreIoError("corrupt data files for " + alias + ": " + e.what());
  }
  return job;
}

std::vector<JobSummary> JobStore::list_jobs() const {
  std::vector<JobSummary> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_, ec)) {
    if (!entry.is_directory()) continue;
    const std::string alias = entry.path().filename().string();
    if (!valid_alias(alias) || !fs::exists(entry.path() / "manifest.json")) continue;
    JobSummary summary;
    summary.alias = alias;
    try {
      const JobManifest m = load_manifest(alias);
      summary.status = m.status;
      summary.query = m.query;
      summary.created_at = m.created_at;
      summary.finished_at = m.finished_at;
      summary.record_count = m.dedup ? m.dedup->final_count : 0;
    } catch (const std::exception& e) {
      summary.status = JobStatus::Failed;
      summary.warning = std::string("manifest could not be parsed: ") + e.what();
    }
    out.push_back(std::move(summary));
  }
  std::sort(out.begin(), out.end(), [](const JobSummary& a, const JobSummary& b) {
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.alias < b.alias;
  });
  return out;
}

// ---------------------------------------------------------------------------

std::string export_csv(std::span<const ArticleRecord> records, std::span<const ClassificationResult> classifications) {
  std::vector<const ClassificationResult*> by_index(records.size(), nullptr);
  for (const auto& c : classifications) {
    if (c.record_index < by_index.size()) by_index[c.record_index] = &c;
  }
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::string authors;
    for (const auto& a : r.authors) {
      if (!authors.empty()) authors += "; ";
      authors += a;
    }
    const auto* c = by_index[i];
    out += csv::format_row({r.title(), authors, r.year() ? std::to_string(*r.year()) : "", r.doi().value_or(""),
                            r.url.value_or(""), r.abstract.value_or(""), std::string(source_name(r.source)),
                            r.source_record_id.value_or(""), r.language.value_or(""),
                            c ? std::string(label_name(c->label)) : "", c ? c->model_id : ""});
  }
  return out;
}

}  // namespace litharvest

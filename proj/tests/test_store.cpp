#include <doctest.h>

#include "litharvest/csv.hpp"
#include "litharvest/store.hpp"

#include "support/tempdir.hpp"

#include <fstream>

using namespace litharvest;
namespace fs = std::filesystem;

namespace {

JobManifest manifest(const std::string& alias, const std::string& created = "2024-06-01T10:00:00.000Z") {
  JobManifest m;
  m.alias = alias;
  m.query = "Ghana AND Yield";
  m.sources = default_source_settings();
  m.created_at = created;
  return m;
}

std::vector<ArticleRecord> sample_records() {
  ArticleRecord a(Source::Scopus, "Maize yield, Ghana");
  a.set_doi("10.1/a");
  a.set_year(2019);
  a.authors = {"Mensah K.", "Owusu A."};
  a.abstract = "Line one\nline \"two\"";
  a.source_record_id = "85000000001";
  a.language = "en";
  ArticleRecord b(Source::WebOfScience, "Soil nitrogen");
  b.url = "https://wos/b";
  b.language = "unknown";
  ArticleRecord c(Source::GoogleScholar, "Scholar only");
  return {a, b, c};
}

std::vector<ClassificationResult> sample_labels() {
  return {{.record_index = 0, .label = Label::Relevant, .raw_output = "Relevant", .model_id = "stub-keyword-rule-v1",
           .prompt_digest = "d0", .attempts = 1, .error = ""},
          {.record_index = 2, .label = Label::Unknown, .raw_output = "", .model_id = "stub-keyword-rule-v1",
           .prompt_digest = "d2", .attempts = 2, .error = "timeout"}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("CSV export: fixed header, quoting, absent values empty") {
  const auto records = sample_records();
  const auto labels = sample_labels();
  const std::string expected =
      "title,authors,year,doi,url,abstract,source,source_record_id,language,relevance,model_id\n"
      "\"Maize yield, Ghana\",Mensah K.; Owusu A.,2019,10.1/a,,\"Line one\nline \"\"two\"\"\",Scopus,85000000001,en,"
      "Relevant,stub-keyword-rule-v1\n"
      "Soil nitrogen,,,,https://wos/b,,WebOfScience,,unknown,,\n"
      "Scholar only,,,,,,GoogleScholar,,,Unknown,stub-keyword-rule-v1\n";
  CHECK(export_csv(records, labels) == expected);
  CHECK(export_csv({}) == std::string(kCsvHeader) + "\n");

  const auto rows = csv::parse(export_csv(records, labels));
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) CHECK(row.size() == 11);
  CHECK(rows[1][5] == "Line one\nline \"two\"");
}

TEST_CASE("manifest JSON round trip") {
  JobManifest m = manifest("rt");
  m.year_range = YearRange{2019, 2021};
  m.status = JobStatus::Classifying;
  m.model_id = "stub";
  m.finished_at = "2024-06-01T11:00:00.000Z";
  m.source_counts = {{Source::Scopus, 10}, {Source::WebOfScience, 3}};
  m.dedup = DedupReport{{{Stage::SourceId, 10, 10, 9, 1}}, 9};
  m.warnings = {"w"};
  CHECK(manifest_from_json(to_json(m)) == m);
  CHECK(to_json(m)["template_id"] == "zero-shot-keyword-frequency-v1");
}

TEST_CASE("save and load round trip") {
  support::TempDir dir("store");
  JobStore store(dir.path());
  store.create(manifest("job-1"));
  CHECK(store.exists("job-1"));
  CHECK(store.load_manifest("job-1").status == JobStatus::Pending);

  JobManifest done = manifest("job-1");
  done.status = JobStatus::Done;
  done.dedup = DedupReport{{{Stage::SourceId, 3, 3, 3, 0}}, 3};
  JobReports reports{.source_counts = {{Source::Scopus, 1}}, .dedup = done.dedup, .warnings = {"careful"},
                     .evaluation = nullptr};
  store.save(done, sample_records(), sample_labels(), reports);

  const StoredJob loaded = store.load("job-1");
  CHECK(loaded.manifest.status == JobStatus::Done);
  CHECK(loaded.manifest.generation == 1);
  CHECK(loaded.records == sample_records());
  CHECK(loaded.classifications == sample_labels());
  CHECK(loaded.reports.warnings == std::vector<std::string>{"careful"});
  CHECK(loaded.reports.dedup->final_count == 3);
  CHECK(loaded.reports.source_counts.at(Source::Scopus) == 1);

  // A second save replaces the previous generation's files.
  store.save(done, std::vector<ArticleRecord>{sample_records()[1]}, {}, reports);
  CHECK(store.load("job-1").records.size() == 1);
  CHECK(store.load_manifest("job-1").generation == 2);
  CHECK_FALSE(fs::exists(dir / "job-1" / "records-1.jsonl"));
  CHECK(fs::exists(dir / "job-1" / "records-2.jsonl"));

  JobManifest relabel = store.load_manifest("job-1");
  relabel.model_id = "changed";
  store.update_manifest(relabel);
  CHECK(store.load_manifest("job-1").model_id == "changed");
  CHECK(store.load("job-1").records.size() == 1);
}

TEST_CASE("aliases are unique and must be valid") {
  support::TempDir dir("store");
  JobStore store(dir.path());
  store.create(manifest("dup"));
  CHECK_THROWS_AS(store.create(manifest("dup")), AliasConflict);
  CHECK_THROWS_AS(store.create(manifest("../escape")), ValidationError);
  CHECK_THROWS_AS(store.load("missing"), JobNotFound);
  CHECK_THROWS_AS(store.load("../etc"), JobNotFound);
  CHECK_THROWS_AS(store.save(manifest("missing"), {}, {}, {}), JobNotFound);
  CHECK_FALSE(store.exists("missing"));
}

TEST_CASE("a crash before the manifest commit leaves the previous state") {
  support::TempDir dir("store");
  JobStore store(dir.path());
  store.create(manifest("crash"));
  JobManifest first = manifest("crash");
  first.status = JobStatus::Done;
  store.save(first, sample_records(), sample_labels(), {});

  store.set_fault_hook([](std::string_view point) {
    if (point == "data-written") throw std::runtime_error("simulated crash");
  });
  JobManifest second = first;
  second.model_id = "never-committed";
  CHECK_THROWS_AS(store.save(second, {}, {}, {}), std::runtime_error);
  store.set_fault_hook({});

  const StoredJob after = store.load("crash");
  CHECK(after.manifest.generation == 1);
  CHECK(after.manifest.model_id.empty());
  CHECK(after.records == sample_records());

  // The orphaned generation is replaced by the next successful save.
  store.save(second, {}, {}, {});
  CHECK(store.load("crash").records.empty());
  CHECK(store.load_manifest("crash").generation == 2);
}

TEST_CASE("listing: newest first, corrupt manifests reported as Failed") {
  support::TempDir dir("store");
  JobStore store(dir.path());
  CHECK(store.list_jobs().empty());
  store.create(manifest("older", "2024-06-01T10:00:00.000Z"));
  store.create(manifest("newer", "2024-06-02T10:00:00.000Z"));
  store.create(manifest("broken", "2024-06-03T10:00:00.000Z"));
  { std::ofstream(dir / "broken" / "manifest.json", std::ios::trunc) << "{ not json"; }
  fs::create_directories(dir / "stray-directory");

  const auto jobs = store.list_jobs();
  REQUIRE(jobs.size() == 3);
  CHECK(jobs[0].alias == "newer");
  CHECK(jobs[1].alias == "older");
  CHECK(jobs[2].alias == "broken");
  CHECK(jobs[2].status == JobStatus::Failed);
  CHECK(jobs[2].warning.has_value());
  CHECK_THROWS_AS(store.load_manifest("broken"), StoreIoError);
}

TEST_CASE("atomic writes leave no temp files") {
  support::TempDir dir("store");
  write_file_atomic(dir / "f.txt", "one");
  write_file_atomic(dir / "f.txt", "two");
  CHECK(slurp(dir / "f.txt") == "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++files;
  CHECK(files == 1);
}

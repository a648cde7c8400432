#pragma once

#include "litharvest/record.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace litharvest {

enum class Stage { SourceId, Doi, Title, Url, Language };

std::string_view stage_name(Stage stage);

// One cleaning stage. `added` counts records merged into the working set
// right before the stage ran (the second merge group joins before the DOI
// stage), so before == previous.after + added and before == after + removed.
struct StageStats {
  Stage stage = Stage::SourceId;
  std::size_t added = 0;
  std::size_t before = 0;
  std::size_t after = 0;
  std::size_t removed = 0;
  friend bool operator==(const StageStats&, const StageStats&) = default;
};

struct DedupReport {
  std::vector<StageStats> stages;
  std::size_t final_count = 0;

  // Conservation and chaining checks over all stages.
  bool consistent() const;
};

nlohmann::json to_json(const DedupReport& report);
DedupReport dedup_report_from_json(const nlohmann::json& j);
// Table of Initial / before / after / removed rows, one block per stage.
std::string format_report(const DedupReport& report, const std::map<Source, std::size_t>& initial_counts = {});

using KeyExtractor = std::function<std::optional<std::string>(const ArticleRecord&)>;

struct DedupResult {
  std::vector<ArticleRecord> kept;
  std::size_t removed = 0;
};

// Keeps one record per key (records without a key are always kept). The
// survivor is the highest-priority source (Scopus > ScienceDirect >
// WebOfScience > GoogleScholar > Fixture), earliest input position on ties;
// its missing abstract/DOI/URL/year are backfilled from the discarded
// duplicates (in the same priority order). Survivors keep the position of
// their key's first occurrence.
DedupResult dedup_by_key(std::vector<ArticleRecord> records, const KeyExtractor& key);

// Key extractors for the built-in stages.
std::optional<std::string> source_id_key(const ArticleRecord& r);
std::optional<std::string> doi_key(const ArticleRecord& r);
std::optional<std::string> title_key(const ArticleRecord& r);
std::optional<std::string> url_key(const ArticleRecord& r);

enum class LanguageGuess { English, Other, Unknown };

inline constexpr std::size_t kLanguageMinTokens = 8;
inline constexpr double kEnglishStopwordRatio = 0.12;

// The bundled English function-word list (120 entries).
const std::set<std::string, std::less<>>& english_stopwords();

// English when at least 12% of >= 8 word tokens are English function words;
// Unknown below 8 tokens.
LanguageGuess detect_language(std::string_view text);

struct LanguageFilterResult {
  std::vector<ArticleRecord> kept;
  std::size_t removed = 0;
};

// Classifies each record on its abstract (title when there is no abstract).
// Non-matching records are dropped; kept records are tagged "en", or
// "unknown" when the text is too short to tell.
LanguageFilterResult filter_language(std::vector<ArticleRecord> records, std::string_view keep = "en");

struct PipelineOptions {
  // Records from these sources are merged and deduplicated by source id
  // first; everything else joins before the DOI stage. Empty means a single
  // merge of all records.
  std::vector<Source> first_merge_group{Source::Scopus, Source::ScienceDirect};
  bool url_stage = false;
  bool language_stage = true;
  // Sort survivors by (source priority, normalized title, DOI, source id, URL)
  // so the output does not depend on input order.
  bool canonical_order = true;
};

struct PipelineResult {
  std::vector<ArticleRecord> records;
  DedupReport report;
};

// Stages run in fixed order: SourceId -> Doi -> Title -> [Url] -> Language.
PipelineResult run_pipeline(std::vector<ArticleRecord> records, const PipelineOptions& options = {});

}  // namespace litharvest

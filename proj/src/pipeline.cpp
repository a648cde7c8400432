#include "litharvest/pipeline.hpp"

#include "litharvest/text.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace litharvest {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::SourceId: return "SourceId";
    case Stage::Doi: return "Doi";
    case Stage::Title: return "Title";
    case Stage::Url: return "Url";
    case Stage::Language: return "Language";
  }
  return "SourceId";
}

namespace {

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : {Stage::SourceId, Stage::Doi, Stage::Title, Stage::Url, Stage::Language}) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

}  // namespace

bool DedupReport::consistent() const {
  std::size_t previous_after = 0;
  for (const auto& s : stages) {
    if (s.before != s.after + s.removed) return false;
    if (s.before != previous_after + s.added) return false;
    previous_after = s.after;
  }
  return final_count == previous_after;
}

nlohmann::json to_json(const DedupReport& report) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : report.stages) {
    stages.push_back({{"stage", stage_name(s.stage)},
                      {"added", s.added},
                      {"before", s.before},
                      {"after", s.after},
                      {"removed", s.removed}});
  }
  return {{"stages", stages}, {"final_count", report.final_count}};
}

DedupReport dedup_report_from_json(const nlohmann::json& j) {
  DedupReport r;
  for (const auto& s : j.at("stages")) {
    const auto stage = parse_stage(s.at("stage").get<std::string>());
    if (!stage) throw std::invalid_argument("unknown stage " + s.at("stage").dump());
    r.stages.push_back({*stage, s.value("added", std::size_t{0}), s.at("before").get<std::size_t>(),
                        s.at("after").get<std::size_t>(), s.at("removed").get<std::size_t>()});
  }
  r.final_count = j.at("final_count").get<std::size_t>();
  return r;
}

std::string format_report(const DedupReport& report, const std::map<Source, std::size_t>& initial_counts) {
  std::ostringstream out;
  auto row = [&](std::string_view label, std::size_t value) {
    out << "  " << label;
    for (std::size_t i = label.size(); i < 44; ++i) out << ' ';
    out << value << '\n';
  };
  if (!initial_counts.empty()) {
    out << "Initial record counts\n";
    for (const auto& [source, n] : initial_counts) row(source_name(source), n);
  }
  for (const auto& s : report.stages) {
    const std::string name(stage_name(s.stage));
    out << "Deduplication stage: " << name << '\n';
    if (s.added > 0 && &s != &report.stages.front()) row("Merged into working set", s.added);
    row("Before " + name, s.before);
    row("After " + name, s.after);
    row("Removed (" + name + ")", s.removed);
  }
  out << "Final record count\n";
  row("Final number of unique records", report.final_count);
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

void backfill(ArticleRecord& survivor, const ArticleRecord& other) {
  if (!survivor.abstract && other.abstract) survivor.abstract = other.abstract;
  if (!survivor.doi() && other.doi()) survivor.set_doi(*other.doi());
  if (!survivor.url && other.url) survivor.url = other.url;
  if (!survivor.year() && other.year()) survivor.set_year(*other.year());
}

bool outranks(const ArticleRecord& a, std::size_t a_pos, const ArticleRecord& b, std::size_t b_pos) {
  if (source_rank(a.source) != source_rank(b.source)) return source_rank(a.source) < source_rank(b.source);
  return a_pos < b_pos;
}

}  // namespace

DedupResult dedup_by_key(std::vector<ArticleRecord> records, const KeyExtractor& key) {
  // Each slot is either a keyless record or one key group (input positions).
  std::vector<std::vector<std::size_t>> slots;
  std::unordered_map<std::string, std::size_t> slot_of_key;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto k = key(records[i]);
    if (!k) {
      slots.push_back({i});
      continue;
    }
    auto [it, inserted] = slot_of_key.try_emplace(std::move(*k), slots.size());
    if (inserted) slots.push_back({i});
    else slots[it->second].push_back(i);
  }

  DedupResult result;
  result.kept.reserve(slots.size());
  for (auto& group : slots) {
    std::sort(group.begin(), group.end(), [&](std::size_t a, std::size_t b) {
      return outranks(records[a], a, records[b], b);
    });
    ArticleRecord survivor = std::move(records[group.front()]);
    for (std::size_t j = 1; j < group.size(); ++j) backfill(survivor, records[group[j]]);
    result.removed += group.size() - 1;
    result.kept.push_back(std::move(survivor));
  }
  return result;
}

std::optional<std::string> source_id_key(const ArticleRecord& r) {
  if (!r.source_record_id || r.source_record_id->empty()) return std::nullopt;
  // Scopus and ScienceDirect share the Scopus identifier space.
  std::string_view ns;
  switch (r.source) {
    case Source::Scopus:
    case Source::ScienceDirect: ns = "scopus"; break;
    case Source::WebOfScience: ns = "wos"; break;
    case Source::GoogleScholar: ns = "gscholar"; break;
    case Source::Fixture: ns = "fixture"; break;
  }
  return std::string(ns) + ":" + *r.source_record_id;
}

std::optional<std::string> doi_key(const ArticleRecord& r) { return r.doi(); }

std::optional<std::string> title_key(const ArticleRecord& r) {
  if (r.normalized_title().empty()) return std::nullopt;
  return r.normalized_title();
}

std::optional<std::string> url_key(const ArticleRecord& r) {
  if (!r.url) return std::nullopt;
  std::string_view u = text::trim(*r.url);
  for (std::string_view scheme : {"https://", "http://"}) {
    if (text::istarts_with(u, scheme)) {
      u.remove_prefix(scheme.size());
      break;
    }
  }
  if (text::istarts_with(u, "www.")) u.remove_prefix(4);
  while (!u.empty() && u.back() == '/') u.remove_suffix(1);
  if (u.empty()) return std::nullopt;
  // Host is case-insensitive, the path is not.
  const auto slash = u.find('/');
  std::string key = text::ascii_lower(u.substr(0, slash));
  if (slash != std::string_view::npos) key.append(u.substr(slash));
  return key;
}

// ---------------------------------------------------------------------------

const std::set<std::string, std::less<>>& english_stopwords() {
  static const std::set<std::string, std::less<>> words{
      "a",       "about",   "above",   "after",   "again",   "against", "all",     "also",    "am",      "an",
      "and",     "any",     "are",     "as",      "at",      "be",      "because", "been",    "before",  "being",
      "below",   "between", "both",    "but",     "by",      "can",     "could",   "did",     "do",      "does",
      "doing",   "down",    "during",  "each",    "either",  "few",     "for",     "from",    "further", "had",
      "has",     "have",    "having",  "he",      "her",     "here",    "hers",    "him",     "his",     "how",
      "however", "i",       "if",      "in",      "into",    "is",      "it",      "its",     "itself",  "just",
      "may",     "me",      "might",   "more",    "most",    "much",    "must",    "my",      "no",      "nor",
      "not",     "now",     "of",      "off",     "on",      "once",    "only",    "or",      "other",   "our",
      "out",     "over",    "own",     "same",    "she",     "should",  "so",      "some",    "such",    "than",
      "that",    "the",     "their",   "them",    "then",    "there",   "these",   "they",    "this",    "those",
      "through", "thus",    "to",      "too",     "under",   "until",   "up",      "upon",    "very",    "was",
      "we",      "were",    "what",    "when",    "where",   "which",   "while",   "who",     "whom",    "with",
  };
  return words;
}

LanguageGuess detect_language(std::string_view document) {
  const auto tokens = text::words(document);
  if (tokens.size() < kLanguageMinTokens) return LanguageGuess::Unknown;
  const auto& stop = english_stopwords();
  const auto hits = std::count_if(tokens.begin(), tokens.end(), [&](const std::string& w) { return stop.contains(w); });
  const double ratio = static_cast<double>(hits) / static_cast<double>(tokens.size());
  return ratio >= kEnglishStopwordRatio ? LanguageGuess::English : LanguageGuess::Other;
}

LanguageFilterResult filter_language(std::vector<ArticleRecord> records, std::string_view keep) {
  if (keep != "en") throw std::invalid_argument("only English (en) filtering is supported");
  LanguageFilterResult result;
  result.kept.reserve(records.size());
  for (auto& r : records) {
    const std::string& subject = (r.abstract && !text::trim(*r.abstract).empty()) ? *r.abstract : r.title();
    switch (detect_language(subject)) {
      case LanguageGuess::English:
        r.language = "en";
        result.kept.push_back(std::move(r));
        break;
      case LanguageGuess::Unknown:
        r.language = "unknown";
        result.kept.push_back(std::move(r));
        break;
      case LanguageGuess::Other:
        ++result.removed;
        break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

void run_dedup_stage(Stage stage, const KeyExtractor& key, std::vector<ArticleRecord>& working, std::size_t added,
                     DedupReport& report) {
  const std::size_t before = working.size();
  auto result = dedup_by_key(std::move(working), key);
  working = std::move(result.kept);
  report.stages.push_back({stage, added, before, working.size(), result.removed});
}

bool canonical_less(const ArticleRecord& a, const ArticleRecord& b) {
  auto tie = [](const ArticleRecord& r) {
    return std::tie(r.source, r.normalized_title(), r.doi(), r.source_record_id, r.url);
  };
  return tie(a) < tie(b);
}

}  // namespace

PipelineResult run_pipeline(std::vector<ArticleRecord> records, const PipelineOptions& options) {
  std::vector<ArticleRecord> working;
  std::vector<ArticleRecord> deferred;
  if (options.first_merge_group.empty()) {
    working = std::move(records);
  } else {
    for (auto& r : records) {
      const bool first = std::find(options.first_merge_group.begin(), options.first_merge_group.end(), r.source) !=
                         options.first_merge_group.end();
      (first ? working : deferred).push_back(std::move(r));
    }
  }

  PipelineResult result;
  DedupReport& report = result.report;
  run_dedup_stage(Stage::SourceId, source_id_key, working, working.size(), report);

  const std::size_t added = deferred.size();
  std::move(deferred.begin(), deferred.end(), std::back_inserter(working));
  run_dedup_stage(Stage::Doi, doi_key, working, added, report);
  run_dedup_stage(Stage::Title, title_key, working, 0, report);
  if (options.url_stage) run_dedup_stage(Stage::Url, url_key, working, 0, report);

  if (options.language_stage) {
    const std::size_t before = working.size();
    auto filtered = filter_language(std::move(working));
    working = std::move(filtered.kept);
    report.stages.push_back({Stage::Language, 0, before, working.size(), filtered.removed});
  }

  if (options.canonical_order) std::stable_sort(working.begin(), working.end(), canonical_less);
  report.final_count = working.size();
  result.records = std::move(working);
  return result;
}

}  // namespace litharvest

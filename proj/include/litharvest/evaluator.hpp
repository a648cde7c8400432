#pragma once

#include "litharvest/classifier.hpp"
#include "litharvest/record.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace litharvest {

struct HumanEntry {
  std::optional<std::string> doi;
  std::string title;
  std::string normalized_title;

  // Throws std::invalid_argument when both DOI and title are blank.
  static HumanEntry make(std::string_view doi, std::string_view title);
};

struct HumanRelevantList {
  std::string label;
  std::vector<HumanEntry> entries;

  // CSV with a header naming (at least) the columns doi and title, in any
  // order and case. Throws csv::CsvError when the header is missing, there
  // are no entries, or a row has neither DOI nor title.
  static HumanRelevantList from_csv(std::string_view data, std::string label = {});
};

// DOI first, then normalized title; lookup tables are built once.
class RecordMatcher {
 public:
  explicit RecordMatcher(std::span<const ArticleRecord> records);
  std::optional<std::size_t> match(const HumanEntry& entry) const;

 private:
  std::unordered_map<std::string, std::size_t> by_doi_;
  std::unordered_map<std::string, std::size_t> by_title_;
};

// Index of the matched record, if any.
std::optional<std::size_t> match_entry(const HumanEntry& entry, std::span<const ArticleRecord> records);

// Exact ratio kept as integers; rendering rounds half-up to two decimals.
struct OverlapRatio {
  std::size_t numerator = 0;
  std::size_t denominator = 1;

  double percent() const;
  std::string to_string() const;  // e.g. "91.67", "100.00"
};

std::string format_percent_half_up(std::size_t numerator, std::size_t denominator);

struct EvaluationReport {
  std::string label;
  std::size_t human_relevant = 0;
  std::size_t tool_retrieved = 0;
  std::size_t intersection_ht = 0;
  std::size_t missed = 0;
  std::size_t model_relevant = 0;
  std::size_t intersection_hm = 0;
  std::optional<OverlapRatio> overlap;  // absent when intersection_ht == 0
  std::string explanation;
};

nlohmann::json to_json(const EvaluationReport& report);
// One row shaped like the overlap table: counts then the percentage.
std::string format_evaluation(const EvaluationReport& report, std::string_view model = {});

// Overlap accuracy = 100 * |H ∩ M| / |H ∩ T|, where H is the human list,
// T the tool-retrieved records and M those labeled Relevant.
// `labels` must be parallel to `tool_records`.
EvaluationReport evaluate(const HumanRelevantList& human, std::span<const ArticleRecord> tool_records,
                          std::span<const Label> labels);

}  // namespace litharvest

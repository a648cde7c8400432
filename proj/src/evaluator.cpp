#include "litharvest/evaluator.hpp"

#include "litharvest/csv.hpp"
#include "litharvest/text.hpp"

#include <algorithm>
#include <sstream>

namespace litharvest {

HumanEntry HumanEntry::make(std::string_view doi, std::string_view title) {
  HumanEntry e;
  e.doi = normalize_doi(doi);
  e.title = std::string(text::trim(title));
  e.normalized_title = normalize_title(e.title);
  if (!e.doi && e.normalized_title.empty()) {
    throw std::invalid_argument("entry needs a DOI or a title");
  }
  return e;
}

HumanRelevantList HumanRelevantList::from_csv(std::string_view data, std::string label) {
  const auto rows = csv::parse(data);
  if (rows.empty()) throw csv::CsvError("human relevant list is empty");
  std::optional<std::size_t> doi_col;
  std::optional<std::size_t> title_col;
  for (std::size_t i = 0; i < rows.front().size(); ++i) {
    const auto name = text::ascii_lower(text::trim(rows.front()[i]));
    if (name == "doi") doi_col = i;
    if (name == "title") title_col = i;
  }
  if (!doi_col || !title_col) throw csv::CsvError("header must name the columns doi and title");
  if (rows.size() < 2) throw csv::CsvError("human relevant list has no entries");

  HumanRelevantList list;
  list.label = std::move(label);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](std::size_t col) -> std::string_view { return col < row.size() ? row[col] : std::string_view{}; };
    try {
      list.entries.push_back(HumanEntry::make(cell(*doi_col), cell(*title_col)));
    } catch (const std::invalid_argument& e) {
      throw csv::CsvError("row " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  return list;
}

RecordMatcher::RecordMatcher(std::span<const ArticleRecord> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].doi()) by_doi_.try_emplace(*records[i].doi(), i);
    if (!records[i].normalized_title().empty()) by_title_.try_emplace(records[i].normalized_title(), i);
  }
}

std::optional<std::size_t> RecordMatcher::match(const HumanEntry& entry) const {
  if (entry.doi) {
    if (auto it = by_doi_.find(*entry.doi); it != by_doi_.end()) return it->second;
  }
  if (!entry.normalized_title.empty()) {
    if (auto it = by_title_.find(entry.normalized_title); it != by_title_.end()) return it->second;
  }
  return std::nullopt;
}

std::optional<std::size_t> match_entry(const HumanEntry& entry, std::span<const ArticleRecord> records) {
  return RecordMatcher(records).match(entry);
}

std::string format_percent_half_up(std::size_t numerator, std::size_t denominator) {
  if (denominator == 0) throw std::invalid_argument("percentage of an empty set is undefined");
  // hundredths = round_half_up(10000 * n / d)
  const unsigned long long n = numerator;
  const unsigned long long d = denominator;
  const unsigned long long hundredths = (20000ULL * n + d) / (2ULL * d);
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(hundredths / 100) + "." + frac;
}

double OverlapRatio::percent() const {
  return 100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::string OverlapRatio::to_string() const { return format_percent_half_up(numerator, denominator); }

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j{{"label", r.label},
                   {"human_relevant", r.human_relevant},
                   {"tool_retrieved", r.tool_retrieved},
                   {"intersection_ht", r.intersection_ht},
                   {"missed", r.missed},
                   {"model_relevant", r.model_relevant},
                   {"intersection_hm", r.intersection_hm}};
  if (r.overlap) {
    j["overlap_percent"] = r.overlap->to_string();
    j["overlap_ratio"] = {{"numerator", r.overlap->numerator}, {"denominator", r.overlap->denominator}};
  } else {
    j["overlap_percent"] = nullptr;
    j["overlap_ratio"] = nullptr;
  }
  j["explanation"] = r.explanation;
  return j;
}

std::string format_evaluation(const EvaluationReport& r, std::string_view model) {
  std::ostringstream out;
  out << "Keywords        HumanRelevant  ToolRetrieved  H∩T  H-T  Model            ModelRelevant  H∩M  %Overlap\n";
  auto pad = [&](const std::string& s, std::size_t width) {
    out << s;
    for (std::size_t i = s.size(); i < width; ++i) out << ' ';
  };
  pad(r.label.empty() ? "-" : r.label, 16);
  pad(std::to_string(r.human_relevant), 15);
  pad(std::to_string(r.tool_retrieved), 15);
  pad(std::to_string(r.intersection_ht), 5);
  pad(std::to_string(r.missed), 5);
  pad(model.empty() ? "-" : std::string(model), 17);
  pad(std::to_string(r.model_relevant), 15);
  pad(std::to_string(r.intersection_hm), 5);
  out << (r.overlap ? r.overlap->to_string() : "n/a") << '\n';
  if (!r.explanation.empty()) out << r.explanation << '\n';
  return out.str();
}

EvaluationReport evaluate(const HumanRelevantList& human, std::span<const ArticleRecord> tool_records,
                          std::span<const Label> labels) {
  if (labels.size() != tool_records.size()) {
    throw std::invalid_argument("model labels must cover every tool-retrieved record");
  }
  EvaluationReport report;
  report.label = human.label;
  report.human_relevant = human.entries.size();
  report.tool_retrieved = tool_records.size();
  report.model_relevant = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Relevant));

  const RecordMatcher matcher(tool_records);
  for (const auto& entry : human.entries) {
    const auto matched = matcher.match(entry);
    if (!matched) continue;
    ++report.intersection_ht;
    if (labels[*matched] == Label::Relevant) ++report.intersection_hm;
  }
  report.missed = report.human_relevant - report.intersection_ht;
  if (report.intersection_ht > 0) {
    report.overlap = OverlapRatio{report.intersection_hm, report.intersection_ht};
  } else {
    report.explanation = "overlap undefined: no human-relevant entry was found among the tool-retrieved records";
  }
  return report;
}

}  // namespace litharvest

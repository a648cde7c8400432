#include <doctest.h>

#include "litharvest/csv.hpp"
#include "litharvest/evaluator.hpp"

#include "support/oracles.hpp"

#include <random>

using namespace litharvest;

namespace {

ArticleRecord tool(const std::string& title, const char* doi = nullptr) {
  ArticleRecord r(Source::Scopus, title);
  if (doi) r.set_doi(doi);
  return r;
}

HumanRelevantList human(std::vector<HumanEntry> entries) {
  HumanRelevantList l;
  l.label = "test";
  l.entries = std::move(entries);
  return l;
}

}  // namespace

TEST_CASE("percentages round half up at two decimals") {
  CHECK(format_percent_half_up(11, 12) == "91.67");
  CHECK(format_percent_half_up(12, 12) == "100.00");
  CHECK(format_percent_half_up(39, 46) == "84.78");
  CHECK(format_percent_half_up(1, 8) == "12.50");
  CHECK(format_percent_half_up(1, 20000) == "0.01");
  CHECK(format_percent_half_up(1, 40000) == "0.00");
  CHECK(format_percent_half_up(0, 7) == "0.00");
  CHECK_THROWS_AS(format_percent_half_up(1, 0), std::invalid_argument);
  CHECK(OverlapRatio{5, 6}.to_string() == "83.33");
  CHECK(OverlapRatio{5, 6}.percent() == doctest::Approx(83.3333));
}

TEST_CASE("percentages agree with long division for every ratio up to 200") {
  for (std::size_t d = 1; d <= 200; ++d) {
    for (std::size_t n = 0; n <= d; ++n) {
      if (format_percent_half_up(n, d) != oracle::percent_long_division(n, d)) {
        FAIL_CHECK(n << "/" << d << ": " << format_percent_half_up(n, d) << " vs "
                      << oracle::percent_long_division(n, d));
      }
    }
  }
}

TEST_CASE("human entries need a DOI or a title") {
  const auto e = HumanEntry::make(" https://doi.org/10.1/X ", "  A Title. ");
  CHECK(e.doi == "10.1/x");
  CHECK(e.title == "A Title.");
  CHECK(e.normalized_title == "a title");
  CHECK_FALSE(HumanEntry::make("n/a", "t").doi.has_value());
  CHECK_THROWS_AS(HumanEntry::make("", "  "), std::invalid_argument);
  CHECK_THROWS_AS(HumanEntry::make("bogus", "..."), std::invalid_argument);
}

TEST_CASE("human lists parse from CSV with any column order and case") {
  const auto l = HumanRelevantList::from_csv("\xEF\xBB\xBFNotes,Title,DOI\r\nx,\"Maize, yield\",10.1/a\r\n\r\ny,Soil,\n",
                                             "ghana");
  CHECK(l.label == "ghana");
  REQUIRE(l.entries.size() == 2);
  CHECK(l.entries[0].title == "Maize, yield");
  CHECK(l.entries[0].doi == "10.1/a");
  CHECK_FALSE(l.entries[1].doi.has_value());

  CHECK_THROWS_AS(HumanRelevantList::from_csv(""), csv::CsvError);
  CHECK_THROWS_AS(HumanRelevantList::from_csv("doi,title\n"), csv::CsvError);
  CHECK_THROWS_AS(HumanRelevantList::from_csv("name,year\na,2019\n"), csv::CsvError);
  CHECK_THROWS_AS(HumanRelevantList::from_csv("doi,title\n,\n"), csv::CsvError);
  CHECK_THROWS_AS(HumanRelevantList::from_csv("doi,title\n\"unterminated,x\n"), csv::CsvError);
}

TEST_CASE("CSV reader") {
  using Rows = std::vector<std::vector<std::string>>;
  CHECK(csv::parse("a,b\n1,2\n") == Rows{{"a", "b"}, {"1", "2"}});
  CHECK(csv::parse("a,\"b \"\"q\"\"\nline\"\r\n") == Rows{{"a", "b \"q\"\nline"}});
  CHECK(csv::parse("x,,\n") == Rows{{"x", "", ""}});
  CHECK(csv::parse("") == Rows{});
  CHECK(csv::parse("last") == Rows{{"last"}});
  CHECK_THROWS_AS(csv::parse("\"a\"b\n"), csv::CsvError);
  CHECK(csv::escape_field("plain") == "plain");
  CHECK(csv::escape_field("a,b") == "\"a,b\"");
  CHECK(csv::escape_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::format_row({"a", "b,c", ""}) == "a,\"b,c\",\n");
  CHECK(csv::parse(csv::format_row({"x\ny", "\"", ","})) == Rows{{"x\ny", "\"", ","}});
}

TEST_CASE("matching uses the DOI first, then the normalized title") {
  const std::vector<ArticleRecord> records{tool("Maize yield in Ghana", "10.1/a"), tool("Soil nitrogen"),
                                           tool("Other", "10.1/b")};
  CHECK(match_entry(HumanEntry::make("10.1/A", "anything"), records) == 0);
  CHECK(match_entry(HumanEntry::make("", "SOIL NITROGEN."), records) == 1);
  CHECK(match_entry(HumanEntry::make("10.9/unknown", "Soil: nitrogen"), records) == 1);
  CHECK_FALSE(match_entry(HumanEntry::make("", "Soil nitrogen dynamics"), records).has_value());
}

TEST_CASE("abbreviated and spelled-out titles do not match") {
  const std::vector<ArticleRecord> records{
      tool("Determination of a critical nitrogen dilution curve for winter wheat crops")};
  CHECK_FALSE(
      match_entry(HumanEntry::make("", "Determination of a critical N dilution curve for winter wheat crops"), records)
          .has_value());
}

TEST_CASE("a toy corpus where the model agrees with every match scores 100") {
  const std::vector<ArticleRecord> records{tool("A", "10.1/a"), tool("B"), tool("C"), tool("D")};
  const std::vector<Label> labels{Label::Relevant, Label::Relevant, Label::Irrelevant, Label::Relevant};
  const auto report = evaluate(human({HumanEntry::make("10.1/a", ""), HumanEntry::make("", "b"),
                                      HumanEntry::make("", "Z")}),
                               records, labels);
  CHECK(report.label == "test");
  CHECK(report.human_relevant == 3);
  CHECK(report.tool_retrieved == 4);
  CHECK(report.intersection_ht == 2);
  CHECK(report.missed == 1);
  CHECK(report.model_relevant == 3);
  CHECK(report.intersection_hm == 2);
  REQUIRE(report.overlap.has_value());
  CHECK(report.overlap->to_string() == "100.00");
  const auto j = to_json(report);
  CHECK(j["overlap_percent"] == "100.00");
  CHECK(j["overlap_ratio"]["denominator"] == 2);
  const auto row = format_evaluation(report, "stub");
  CHECK(row.find("100.00") != std::string::npos);
  CHECK(row.find("stub") != std::string::npos);
}

TEST_CASE("no shared records leaves the overlap undefined") {
  const std::vector<ArticleRecord> records{tool("A")};
  const std::vector<Label> labels{Label::Relevant};
  const auto report = evaluate(human({HumanEntry::make("", "B")}), records, labels);
  CHECK_FALSE(report.overlap.has_value());
  CHECK_FALSE(report.explanation.empty());
  CHECK(to_json(report)["overlap_percent"].is_null());
  CHECK(format_evaluation(report).find("n/a") != std::string::npos);
  const std::vector<Label> short_labels;
  CHECK_THROWS_AS(evaluate(human({}), records, short_labels), std::invalid_argument);
}

TEST_CASE("evaluation agrees with brute-force set algebra on small corpora") {
  std::mt19937_64 rng(301);
  const std::vector<std::string> titles{"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  for (int round = 0; round < 500; ++round) {
    const std::size_t n_tool = pick(21);
    const std::size_t n_human = 1 + pick(8);
    std::vector<ArticleRecord> records;
    std::vector<Label> labels;
    std::vector<oracle::SmallRecord> small_tool;
    for (std::size_t i = 0; i < n_tool; ++i) {
      const std::string title = titles[pick(titles.size())];
      ArticleRecord r(Source::Scopus, pick(2) ? title : "  " + title + ".");
      std::optional<std::string> doi;
      if (pick(3) == 0) {
        doi = "10.7/" + std::to_string(pick(5));
        r.set_doi(*doi);
      }
      const bool relevant = pick(2) == 0;
      records.push_back(r);
      labels.push_back(relevant ? Label::Relevant : (pick(4) ? Label::Irrelevant : Label::Unknown));
      small_tool.push_back({doi, title, relevant});
    }
    std::vector<HumanEntry> entries;
    std::vector<oracle::SmallEntry> small_human;
    for (std::size_t i = 0; i < n_human; ++i) {
      const bool has_doi = pick(2) == 0;
      const bool has_title = !has_doi || pick(2) == 0;
      const std::string doi = has_doi ? "10.7/" + std::to_string(pick(6)) : "";
      const std::string title = has_title ? titles[pick(titles.size())] : "";
      entries.push_back(HumanEntry::make(doi, title));
      small_human.push_back({has_doi ? std::optional<std::string>(doi) : std::nullopt, title});
    }
    const auto report = evaluate(human(entries), records, labels);
    const auto expect = oracle::evaluate_sets(small_human, small_tool);
    CAPTURE(round);
    REQUIRE(report.human_relevant == expect.human);
    REQUIRE(report.tool_retrieved == expect.tool);
    REQUIRE(report.intersection_ht == expect.ht);
    REQUIRE(report.missed == expect.missed);
    REQUIRE(report.model_relevant == expect.model);
    REQUIRE(report.intersection_hm == expect.hm);
    // Bounds.
    REQUIRE(report.intersection_hm <= report.intersection_ht);
    REQUIRE(report.intersection_ht <= report.human_relevant);
    if (report.overlap) {
      REQUIRE(report.overlap->percent() >= 0.0);
      REQUIRE(report.overlap->percent() <= 100.0);
    }
  }
}

TEST_CASE("labelling one more record Relevant never lowers the overlap") {
  std::mt19937_64 rng(302);
  for (int round = 0; round < 200; ++round) {
    std::vector<ArticleRecord> records;
    std::vector<Label> labels;
    std::vector<HumanEntry> entries;
    for (int i = 0; i < 12; ++i) {
      records.push_back(tool("paper " + std::to_string(i)));
      labels.push_back(rng() % 2 ? Label::Relevant : Label::Irrelevant);
      if (rng() % 2) entries.push_back(HumanEntry::make("", "paper " + std::to_string(i)));
    }
    entries.push_back(HumanEntry::make("", "paper 0"));
    const auto list = human(entries);
    const auto before = evaluate(list, records, labels);
    const std::size_t flip = rng() % labels.size();
    labels[flip] = Label::Relevant;
    const auto after = evaluate(list, records, labels);
    REQUIRE(after.intersection_hm >= before.intersection_hm);
    REQUIRE(after.intersection_ht == before.intersection_ht);
    REQUIRE(after.overlap->percent() >= before.overlap->percent());
  }
}

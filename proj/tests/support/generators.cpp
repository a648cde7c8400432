#include "support/generators.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace gen {

using litharvest::ArticleRecord;
using litharvest::QueryExpr;
using litharvest::Source;

namespace {

const std::vector<std::string> kVocabulary = {
    "nitrogen", "yield", "Ghana", "maize", "N uptake", "unmanned aerial vehicle", "grain quality", "NHI",
    "Andes", "orchard", "sandy soil", "Oregon", "water stress", "faba bean", "maïs", "rice", "N", "drone",
    "Nitrogen nutrition index", "Sulphur", "potassium", "soil organic carbon", "Ordovician", "corn"};

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

QueryExpr build(std::mt19937_64& rng, const std::vector<std::string>& terms, int depth) {
  if (depth <= 1 || uniform(rng, 0, 3) == 0) return QueryExpr::term(pick(rng, terms));
  const bool is_and = uniform(rng, 0, 1) == 0;
  std::vector<QueryExpr> kids;
  const std::size_t n = uniform(rng, 2, 4);
  for (std::size_t i = 0; i < n; ++i) kids.push_back(build(rng, terms, depth - 1));
  return is_and ? QueryExpr::all_of(std::move(kids)) : QueryExpr::any_of(std::move(kids));
}

std::string random_case(std::mt19937_64& rng, std::string op) {
  for (char& c : op) {
    if (uniform(rng, 0, 1)) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return op;
}

}  // namespace

QueryExpr random_query(std::mt19937_64& rng, int max_depth) { return build(rng, kVocabulary, max_depth); }

QueryExpr random_query_over(std::mt19937_64& rng, const std::vector<std::string>& terms, int max_depth) {
  return build(rng, terms, max_depth);
}

std::string random_query_text(std::mt19937_64& rng, std::size_t max_terms) {
  std::size_t budget = uniform(rng, 1, max_terms);
  std::function<std::string(bool)> sequence = [&](bool grouped) {
    std::string out;
    const std::size_t items = grouped ? 2 : 1;
    for (std::size_t i = 0; budget > 0 && (i < items || uniform(rng, 0, 2) != 0); ++i) {
      if (i > 0) out += " " + random_case(rng, uniform(rng, 0, 1) ? "AND" : "OR") + " ";
      if (budget >= 2 && uniform(rng, 0, 3) == 0) {
        out += "(" + sequence(true) + ")";
      } else {
        out += pick(rng, kVocabulary);
        --budget;
      }
    }
    if (out.empty() || out.back() == ' ') out += pick(rng, kVocabulary);
    return out;
  };
  return sequence(false);
}

std::string english_abstract(std::mt19937_64& rng, std::size_t sentences) {
  static const std::vector<std::string> kSentences = {
      "The experiment was conducted at two sites over three seasons.",
      "Yield increased with the rate of nitrogen that was applied to the crop.",
      "There was no effect of the treatment on the grain protein content.",
      "These results show that the response of maize is limited by water in the dry years.",
      "Soil samples were collected before planting and after the harvest of each crop.",
      "The model was calibrated with data from the first year and validated with the rest.",
  };
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) out += (i ? " " : "") + pick(rng, kSentences);
  return out;
}

std::vector<ArticleRecord> random_corpus(std::mt19937_64& rng, const CorpusOptions& options) {
  static const std::vector<std::string> kNonEnglish = {
      "Les essais ont été conduits pendant trois saisons dans les régions du nord avec des doses croissantes "
      "d'azote et de phosphore pour le maïs.",
      "Die Versuche wurden in drei Jahren auf zwei Standorten mit steigenden Stickstoffgaben im Mais durchgeführt "
      "und der Ertrag wurde gemessen.",
  };
  static const std::vector<Source> kSources = {Source::Scopus, Source::ScienceDirect, Source::WebOfScience,
                                               Source::GoogleScholar, Source::Fixture};
  std::vector<ArticleRecord> out;
  for (std::size_t w = 0; w < options.works && out.size() < options.max_records; ++w) {
    const std::string base_title = "Study " + std::to_string(w) + " of " + pick(rng, kVocabulary) + " response";
    const bool has_doi = uniform(rng, 0, 4) != 0;
    const std::string doi = "10.7777/work." + std::to_string(w);
    const int year = static_cast<int>(uniform(rng, 1990, 2022));
    const bool english = std::uniform_real_distribution<double>(0, 1)(rng) >= options.non_english;
    const std::string abstract = english ? english_abstract(rng, uniform(rng, 2, 4)) : pick(rng, kNonEnglish);
    const std::string scopus_id = std::to_string(90000000000ULL + w);

    const std::size_t copies = uniform(rng, 1, 4);
    for (std::size_t c = 0; c < copies && out.size() < options.max_records; ++c) {
      const Source source = pick(rng, kSources);
      std::string title = base_title;
      switch (uniform(rng, 0, 3)) {
        case 0: break;
        case 1: std::transform(title.begin(), title.end(), title.begin(), ::toupper); break;
        case 2: title += "."; break;
        case 3: title = "  " + title + " ?"; break;
      }
      ArticleRecord r(source, title);
      if (has_doi && uniform(rng, 0, 3) != 0) r.set_doi(doi);
      r.set_year(year);
      if (source != Source::GoogleScholar) r.abstract = abstract;
      switch (source) {
        case Source::Scopus:
        case Source::ScienceDirect: r.source_record_id = scopus_id; break;
        case Source::WebOfScience: r.source_record_id = "WOS:" + std::to_string(w); break;
        case Source::GoogleScholar: r.source_record_id = "GS" + std::to_string(w); break;
        case Source::Fixture: r.source_record_id = "fx-" + std::to_string(w); break;
      }
      r.url = "https://example.org/" + std::string(litharvest::source_key(source)) + "/" + std::to_string(w);
      out.push_back(std::move(r));
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace gen

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace litharvest {

// Listed in dedup survivor priority order (earlier wins).
enum class Source { Scopus, ScienceDirect, WebOfScience, GoogleScholar, Fixture };

inline constexpr Source kAllSources[] = {Source::Scopus, Source::ScienceDirect, Source::WebOfScience,
                                         Source::GoogleScholar, Source::Fixture};

// Display name used in CSV and reports ("Scopus", "WebOfScience", ...).
std::string_view source_name(Source source);
// Short configuration key ("scopus", "sciencedirect", "wos", "gscholar", "fixture").
std::string_view source_key(Source source);
// Accepts either the display name or the short key, case-insensitively.
std::optional<Source> parse_source(std::string_view name);
int source_rank(Source source);

std::optional<std::string> normalize_doi(std::string_view raw);
std::string normalize_title(std::string_view raw);

int current_year();
inline constexpr int kMinYear = 1800;
bool valid_year(int year);

// Normalized publication metadata. Title, DOI and year go through setters so
// that the derived/normalized forms can never drift from the raw values.
class ArticleRecord {
 public:
  ArticleRecord(Source source, std::string_view title);

  Source source = Source::Fixture;
  std::optional<std::string> source_record_id;
  std::optional<std::string> abstract;
  std::vector<std::string> authors;
  std::optional<std::string> url;
  std::optional<std::string> language;
  std::map<std::string, std::string> extra;

  const std::string& title() const noexcept { return title_; }
  const std::string& normalized_title() const noexcept { return normalized_title_; }
  const std::optional<std::string>& doi() const noexcept { return doi_; }
  const std::optional<int>& year() const noexcept { return year_; }

  // Throws std::invalid_argument on an empty title.
  void set_title(std::string_view title);
  // Returns false (and clears the DOI) when the input does not normalize.
  bool set_doi(std::string_view raw);
  void clear_doi() { doi_.reset(); }
  // Throws std::out_of_range outside [1800, current year + 1].
  void set_year(int year);
  void clear_year() { year_.reset(); }

  friend bool operator==(const ArticleRecord&, const ArticleRecord&) = default;

 private:
  std::string title_;
  std::string normalized_title_;
  std::optional<std::string> doi_;
  std::optional<int> year_;
};

using Payload = std::map<std::string, std::string>;

class RecordError : public std::runtime_error {
 public:
  RecordError(Source source, std::string message, Payload payload);
  Source source() const noexcept { return source_; }
  const Payload& payload() const noexcept { return payload_; }

 private:
  Source source_;
  Payload payload_;
};

// Field mapping per source
// ------------------------
//   field            Fixture      Scopus / ScienceDirect   WebOfScience          GoogleScholar
//   title            title        dc:title                 title                 bib.title
//   doi              doi          prism:doi                identifiers.doi       (none)
//   abstract         abstract     dc:description           abstract              (none, kept in extra)
//   authors          authors (;)  authors (;), dc:creator  names.authors (;)     bib.author (" and ")
//   year             year         prism:coverDate (Y-M-D)  source.publishYear    bib.pub_year
//   url              url          prism:url                links.record          pub_url
//   source id        id           dc:identifier (Scopus)   uid                   cluster_id
//                                 scopus-id (ScienceDirect)
//   language         language     language                 language              (none)
// A "SCOPUS_ID:" prefix on source ids is removed. Every key not consumed
// above is copied verbatim into extra, as are unparseable years
// (under "year_raw") and DOIs that fail normalization ("doi_raw").
ArticleRecord from_source_payload(Source source, const Payload& payload);

nlohmann::json to_json(const ArticleRecord& record);
ArticleRecord record_from_json(const nlohmann::json& j);

}  // namespace litharvest

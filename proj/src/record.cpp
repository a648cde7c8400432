#include "litharvest/record.hpp"

#include "litharvest/text.hpp"

#include <cctype>
#include <charconv>
#include <chrono>

namespace litharvest {

std::string_view source_name(Source source) {
  switch (source) {
    case Source::Scopus: return "Scopus";
    case Source::ScienceDirect: return "ScienceDirect";
    case Source::WebOfScience: return "WebOfScience";
    case Source::GoogleScholar: return "GoogleScholar";
    case Source::Fixture: return "Fixture";
  }
  return "Fixture";
}

std::string_view source_key(Source source) {
  switch (source) {
    case Source::Scopus: return "scopus";
    case Source::ScienceDirect: return "sciencedirect";
    case Source::WebOfScience: return "wos";
    case Source::GoogleScholar: return "gscholar";
    case Source::Fixture: return "fixture";
  }
  return "fixture";
}

std::optional<Source> parse_source(std::string_view name) {
  for (Source s : kAllSources) {
    if (text::iequals(name, source_name(s)) || text::iequals(name, source_key(s))) return s;
  }
  return std::nullopt;
}

int source_rank(Source source) { return static_cast<int>(source); }

std::optional<std::string> normalize_doi(std::string_view raw) {
  std::string_view s = text::trim(raw);
  for (std::string_view prefix : {"https://doi.org/", "http://doi.org/", "doi:"}) {
    if (text::istarts_with(s, prefix)) {
      s = text::trim(s.substr(prefix.size()));
      break;
    }
  }
  std::string doi = text::ascii_lower(s);
  if (doi.empty() || !doi.starts_with("10.")) return std::nullopt;
  return doi;
}

std::string normalize_title(std::string_view raw) { return text::normalize_for_matching(raw); }

int current_year() {
  const auto today = std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now())};
  return static_cast<int>(today.year());
}

bool valid_year(int year) { return year >= kMinYear && year <= current_year() + 1; }

ArticleRecord::ArticleRecord(Source src, std::string_view title) : source(src) { set_title(title); }

void ArticleRecord::set_title(std::string_view title) {
  const auto trimmed = text::trim(title);
  if (trimmed.empty()) throw std::invalid_argument("article title must not be empty");
  title_ = std::string(trimmed);
  normalized_title_ = normalize_title(title_);
}

bool ArticleRecord::set_doi(std::string_view raw) {
  doi_ = normalize_doi(raw);
  return doi_.has_value();
}

void ArticleRecord::set_year(int year) {
  if (!valid_year(year)) {
    throw std::out_of_range("publication year out of range: " + std::to_string(year));
  }
  year_ = year;
}

RecordError::RecordError(Source source, std::string message, Payload payload)
    : std::runtime_error(std::string(source_name(source)) + ": " + message),
      source_(source),
      payload_(std::move(payload)) {}

namespace {

struct FieldMap {
  std::string_view title;
  std::vector<std::string_view> doi;
  std::vector<std::string_view> abstract;
  std::vector<std::string_view> authors;
  std::string_view author_separator;
  std::vector<std::string_view> year;
  std::vector<std::string_view> url;
  std::vector<std::string_view> id;
  std::vector<std::string_view> language;
};

const FieldMap& field_map(Source source) {
  static const FieldMap fixture{"title", {"doi"}, {"abstract"}, {"authors"}, ";", {"year"}, {"url"}, {"id"}, {"language"}};
  static const FieldMap scopus{"dc:title", {"prism:doi"}, {"dc:description"}, {"authors", "dc:creator"}, ";",
                               {"prism:coverDate"}, {"prism:url"}, {"dc:identifier"}, {"language"}};
  static const FieldMap sciencedirect{"dc:title", {"prism:doi"}, {"dc:description"}, {"authors", "dc:creator"}, ";",
                                      {"prism:coverDate"}, {"prism:url"}, {"scopus-id"}, {"language"}};
  static const FieldMap wos{"title", {"identifiers.doi"}, {"abstract"}, {"names.authors"}, ";",
                            {"source.publishYear"}, {"links.record"}, {"uid"}, {"language"}};
  static const FieldMap scholar{"bib.title", {}, {}, {"bib.author"}, " and ", {"bib.pub_year"}, {"pub_url"},
                                {"cluster_id"}, {}};
  switch (source) {
    case Source::Scopus: return scopus;
    case Source::ScienceDirect: return sciencedirect;
    case Source::WebOfScience: return wos;
    case Source::GoogleScholar: return scholar;
    case Source::Fixture: return fixture;
  }
  return fixture;
}

std::vector<std::string> split_authors(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    const auto name = text::trim(s.substr(start, end - start));
    if (!name.empty()) out.emplace_back(name);
    start = end + sep.size();
  }
  return out;
}

std::optional<int> leading_year(std::string_view s) {
  s = text::trim(s);
  if (s.size() < 4) return std::nullopt;
  int year = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + 4, year);
  if (ec != std::errc{} || ptr != s.data() + 4) return std::nullopt;
  if (s.size() > 4 && std::isdigit(static_cast<unsigned char>(s[4]))) return std::nullopt;
  return year;
}

}  // namespace

ArticleRecord from_source_payload(Source source, const Payload& payload) {
  const FieldMap& map = field_map(source);
  Payload rest = payload;

  auto take = [&rest](const std::vector<std::string_view>& keys) -> std::optional<std::string> {
    std::optional<std::string> found;
    for (auto key : keys) {
      auto it = rest.find(std::string(key));
      if (it == rest.end()) continue;
      if (!found && !text::trim(it->second).empty()) found = std::string(text::trim(it->second));
      rest.erase(it);
    }
    return found;
  };

  auto title = take({map.title});
  if (!title) throw RecordError(source, "payload has no title (expected key '" + std::string(map.title) + "')", payload);

  ArticleRecord record(source, *title);
  if (auto doi = take(map.doi); doi && !record.set_doi(*doi)) rest["doi_raw"] = *doi;
  record.abstract = take(map.abstract);
  if (auto authors = take(map.authors)) record.authors = split_authors(*authors, map.author_separator);
  if (auto year = take(map.year)) {
    const auto parsed = leading_year(*year);
    if (parsed && valid_year(*parsed)) record.set_year(*parsed);
    else rest["year_raw"] = *year;
  }
  record.url = take(map.url);
  if (auto id = take(map.id)) {
    std::string_view v = *id;
    if (text::istarts_with(v, "SCOPUS_ID:")) v.remove_prefix(10);
    if (!v.empty()) record.source_record_id = std::string(v);
  }
  record.language = take(map.language);
  record.extra = std::move(rest);
  return record;
}

namespace {

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

nlohmann::json to_json(const ArticleRecord& r) {
  return nlohmann::json{
      {"source", source_name(r.source)},
      {"source_record_id", opt(r.source_record_id)},
      {"doi", opt(r.doi())},
      {"title", r.title()},
      {"abstract", opt(r.abstract)},
      {"authors", r.authors},
      {"year", opt(r.year())},
      {"url", opt(r.url)},
      {"language", opt(r.language)},
      {"extra", r.extra},
  };
}

ArticleRecord record_from_json(const nlohmann::json& j) {
  const auto source = parse_source(j.at("source").get<std::string>());
  if (!source) throw std::invalid_argument("unknown source in record: " + j.at("source").dump());
  ArticleRecord r(*source, j.at("title").get<std::string>());
  r.source_record_id = opt_string(j, "source_record_id");
  if (auto doi = opt_string(j, "doi")) r.set_doi(*doi);
  r.abstract = opt_string(j, "abstract");
  if (auto it = j.find("authors"); it != j.end() && !it->is_null()) r.authors = it->get<std::vector<std::string>>();
  if (auto it = j.find("year"); it != j.end() && !it->is_null()) r.set_year(it->get<int>());
  r.url = opt_string(j, "url");
  r.language = opt_string(j, "language");
  if (auto it = j.find("extra"); it != j.end() && !it->is_null()) r.extra = it->get<std::map<std::string, std::string>>();
  return r;
}

}  // namespace litharvest

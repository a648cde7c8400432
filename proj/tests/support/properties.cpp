#include "support/properties.hpp"

#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <random>
#include <set>

namespace props {

using namespace litharvest;

Outcome query_round_trip(std::uint64_t seed, std::size_t count) {
  Outcome out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i, ++out.cases) {
    const QueryExpr e = gen::random_query(rng, 4);
    if (e.depth() > 4) out.fail("generator produced depth " + std::to_string(e.depth()));
    const std::string text = render_query(e);
    try {
      const QueryExpr back = parse_query(text);
      if (!(back == e)) out.fail("round trip changed " + oracle::show(oracle::from_expr(e)) + " via \"" + text + "\"");
      if (back.depth() != e.depth()) out.fail("depth changed for \"" + text + "\"");
      for (auto d : {QueryDialect::TitleAbsKey, QueryDialect::TopicSearch}) {
        const std::string wrapped = render_query(e, d);
        if (!(parse_query(strip_dialect(wrapped, d)) == e)) out.fail("dialect round trip failed: " + wrapped);
      }
    } catch (const std::exception& ex) {
      out.fail("\"" + text + "\" did not parse: " + ex.what());
    }
  }
  return out;
}

Outcome query_truth_tables(std::uint64_t seed, std::size_t expressions) {
  Outcome out;
  std::mt19937_64 rng(seed);
  const std::vector<std::string> pool = {"nitrogen", "yield", "Ghana", "unmanned aerial vehicle", "faba bean", "NHI"};
  for (std::size_t i = 0; i < expressions; ++i) {
    std::vector<std::string> terms = pool;
    std::shuffle(terms.begin(), terms.end(), rng);
    terms.resize(std::uniform_int_distribution<std::size_t>(1, 4)(rng));
    const QueryExpr e = gen::random_query_over(rng, terms, 4);
    const oracle::Tree t = oracle::from_expr(e);
    const auto used = oracle::distinct_terms(t);
    for (unsigned mask = 0; mask < (1u << used.size()); ++mask, ++out.cases) {
      std::string text = "Field notes:";
      std::set<std::string> present;
      for (std::size_t k = 0; k < used.size(); ++k) {
        if (mask & (1u << k)) {
          text += " the " + used[k] + " trial;";
          std::string lower;
          for (char c : used[k]) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          present.insert(lower);
        }
      }
      const bool expected = oracle::evaluate(t, present);
      if (matches(e, text) != expected) {
        out.fail("matches disagrees with truth table for " + oracle::show(t) + " on \"" + text + "\"");
      }
      if (satisfied_by(e, term_frequencies(e, text)) != expected) out.fail("satisfied_by disagrees on \"" + text + "\"");
    }
  }
  return out;
}

Outcome query_precedence(std::uint64_t seed, std::size_t count) {
  Outcome out;
  std::mt19937_64 rng(seed);
  const std::vector<std::string> fixed = {"a OR b AND c", "a AND b OR c", "a OR b OR c AND d AND e OR f",
                                          "(a OR b) AND c", "a AND (b OR c AND d) OR e",
                                          "Ghana AND (Nutrient OR Fertilizer) AND Yield",
                                          "corn OR maize AND (grain quality OR grain composition) AND "
                                          "(nitrogen fertilization OR water stress OR drought stress)"};
  std::vector<std::string> inputs = fixed;
  for (std::size_t i = 0; i < count; ++i) inputs.push_back(gen::random_query_text(rng, 7));
  for (const auto& text : inputs) {
    ++out.cases;
    std::vector<oracle::Tree> trees;
    try {
      trees = oracle::all_precedence_parses(oracle::tokenize(text));
    } catch (const std::exception& e) {
      out.fail("oracle rejected \"" + text + "\": " + e.what());
      continue;
    }
    if (trees.size() != 1) {
      out.fail("precedence rule is ambiguous for \"" + text + "\"");
      continue;
    }
    try {
      const auto got = oracle::from_expr(parse_query(text));
      if (!(got == trees.front())) {
        out.fail("\"" + text + "\": parser " + oracle::show(got) + " vs oracle " + oracle::show(trees.front()));
      }
    } catch (const std::exception& e) {
      out.fail("parser rejected \"" + text + "\": " + e.what());
    }
  }
  return out;
}

Outcome query_structure(std::uint64_t seed, std::size_t count) {
  Outcome out;
  std::mt19937_64 rng(seed);
  std::function<bool(const QueryExpr&)> well_formed = [&](const QueryExpr& e) {
    if (e.is_term()) return !e.phrase().empty();
    if (e.children().size() < 2) return false;
    for (const auto& c : e.children()) {
      if (c.kind() == e.kind() || !well_formed(c)) return false;
    }
    return true;
  };
  for (std::size_t i = 0; i < count; ++i, ++out.cases) {
    const std::string text = gen::random_query_text(rng, 8);
    try {
      if (!well_formed(parse_query(text))) out.fail("malformed tree from \"" + text + "\"");
    } catch (const std::exception& e) {
      out.fail("\"" + text + "\": " + e.what());
    }
  }
  return out;
}

Outcome term_frequency_scan(std::uint64_t seed, std::size_t count) {
  Outcome out;
  std::mt19937_64 rng(seed);
  const std::vector<std::string> words = {"N", "n", "nitrogen", "uptake", "yield", "Yield", "grain", "quality",
                                          "and", "the", "NHI", "maize", "N-uptake", "yield;", "(nitrogen)",
                                          "Nitrogen,", "grain-quality", "x"};
  const std::vector<std::string> terms = {"N", "nitrogen", "N uptake", "yield", "grain quality", "NHI", "maize"};
  for (std::size_t i = 0; i < count; ++i, ++out.cases) {
    std::string text;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
    for (std::size_t k = 0; k < n; ++k) {
      text += (k ? " " : "") + words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
    }
    std::vector<QueryExpr> kids;
    for (const auto& t : terms) kids.push_back(QueryExpr::term(t));
    const QueryExpr e = QueryExpr::any_of(std::move(kids));
    const TermCounts counts = term_frequencies(e, text);
    for (const auto& t : terms) {
      const auto it = counts.find(t);
      const std::size_t got = it == counts.end() ? 0 : it->second;
      if (got != oracle::naive_count(t, text)) {
        out.fail("count of '" + t + "' in \"" + text + "\": " + std::to_string(got) + " vs " +
                 std::to_string(oracle::naive_count(t, text)));
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> survivor_keys(const std::vector<ArticleRecord>& records) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : records) keys.emplace_back(r.doi().value_or(""), r.normalized_title());
  std::sort(keys.begin(), keys.end());
  return keys;
}

namespace {

std::vector<ArticleRecord> corpus(std::mt19937_64& rng) {
  gen::CorpusOptions o;
  o.works = std::uniform_int_distribution<std::size_t>(0, 400)(rng);
  o.max_records = 1000;
  return gen::random_corpus(rng, o);
}

}  // namespace

Outcome pipeline_conservation(std::uint64_t seed, std::size_t corpora) {
  Outcome out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < corpora; ++i) {
    auto records = corpus(rng);
    const std::size_t input = records.size();
    for (bool url : {false, true}) {
      ++out.cases;
      PipelineOptions options;
      options.url_stage = url;
      const auto result = run_pipeline(records, options);
      const auto& rep = result.report;
      std::size_t added = 0;
      for (const auto& s : rep.stages) {
        added += s.added;
        if (s.before != s.after + s.removed) out.fail("stage " + std::string(stage_name(s.stage)) + " leaks records");
      }
      if (!rep.consistent()) out.fail("report chain inconsistent for corpus " + std::to_string(i));
      if (added != input) out.fail("stages saw " + std::to_string(added) + " of " + std::to_string(input) + " records");
      if (rep.final_count != result.records.size()) out.fail("final_count differs from output size");
      if (rep.stages.size() != (url ? 5u : 4u)) out.fail("unexpected stage list");
    }
  }
  return out;
}

Outcome pipeline_idempotence(std::uint64_t seed, std::size_t corpora) {
  Outcome out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < corpora; ++i, ++out.cases) {
    const auto first = run_pipeline(corpus(rng));
    const auto second = run_pipeline(first.records);
    for (const auto& s : second.report.stages) {
      if (s.removed != 0) {
        out.fail("second pass removed " + std::to_string(s.removed) + " at " + std::string(stage_name(s.stage)));
      }
    }
    if (second.report.final_count != first.report.final_count) out.fail("second pass changed the count");
    if (survivor_keys(second.records) != survivor_keys(first.records)) out.fail("second pass changed survivors");
  }
  return out;
}

Outcome pipeline_permutation(std::uint64_t seed, std::size_t corpora, std::size_t shuffles) {
  Outcome out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < corpora; ++i) {
    auto records = corpus(rng);
    const auto base = run_pipeline(records);
    const auto base_keys = survivor_keys(base.records);
    for (std::size_t k = 0; k < shuffles; ++k, ++out.cases) {
      std::shuffle(records.begin(), records.end(), rng);
      const auto again = run_pipeline(records);
      if (again.report.final_count != base.report.final_count) {
        out.fail("final count " + std::to_string(again.report.final_count) + " vs " +
                 std::to_string(base.report.final_count) + " after shuffle");
      }
      if (survivor_keys(again.records) != base_keys) out.fail("survivor key set changed after shuffle");
    }
  }
  return out;
}

}  // namespace props

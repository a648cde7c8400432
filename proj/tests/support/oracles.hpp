#pragma once

// Reference implementations used to cross-check the library. They share no
// code with it: plain ASCII text handling, brute-force search, set algebra.

#include "litharvest/query.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Minimal boolean tree, independent of litharvest::QueryExpr.
struct Tree {
  enum Kind { Term, And, Or } kind = Term;
  std::string phrase;
  std::vector<Tree> children;

  friend bool operator==(const Tree&, const Tree&) = default;
};

Tree from_expr(const litharvest::QueryExpr& e);
std::string show(const Tree& t);

// Tokens: "(", ")", "AND", "OR" or a phrase.
std::vector<std::string> tokenize(const std::string& text);

// Every parse of `tokens` obtained by bracketing each parenthesis-free run
// in all possible ways, keeping only trees in which no AND node has an
// unparenthesized OR operand, then flattening nested same-kind nodes.
// A correct precedence rule leaves exactly one distinct tree.
std::vector<Tree> all_precedence_parses(const std::vector<std::string>& tokens);

// Lowercase ASCII words (runs of [A-Za-z0-9]).
std::vector<std::string> ascii_words(const std::string& text);

// Naive sliding-window count of a phrase's word sequence in text.
std::size_t naive_count(const std::string& phrase, const std::string& text);

bool evaluate(const Tree& t, const std::set<std::string>& present_lower);
std::vector<std::string> distinct_terms(const Tree& t);

// Exhaustive set-membership evaluation over small corpora.
struct SetEvaluation {
  std::size_t human = 0, tool = 0, ht = 0, missed = 0, model = 0, hm = 0;
};

struct SmallRecord {
  std::optional<std::string> doi;  // normalized
  std::string title_key;           // normalized
  bool relevant = false;
};

struct SmallEntry {
  std::optional<std::string> doi;
  std::string title_key;
};

SetEvaluation evaluate_sets(const std::vector<SmallEntry>& human, const std::vector<SmallRecord>& tool);

// Integer half-up rendering of 100 * n / d with two decimals, computed via
// long division on the decimal digits.
std::string percent_long_division(std::size_t n, std::size_t d);

}  // namespace oracle

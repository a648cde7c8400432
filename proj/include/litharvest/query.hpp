#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace litharvest {

// Boolean keyword query: terms (single words or bare multiword phrases)
// combined with AND / OR. Nodes are immutable once built; the factories
// enforce the structural invariants:
//   - And/Or nodes have at least two children,
//   - no And/Or node has a direct child of the same kind (flattened),
//   - term phrases are non-empty, single-spaced, contain no parentheses and
//     no standalone AND/OR word.
class QueryExpr {
 public:
  enum class Kind { Term, And, Or };

  static QueryExpr term(std::string_view phrase);
  static QueryExpr all_of(std::vector<QueryExpr> children);
  static QueryExpr any_of(std::vector<QueryExpr> children);

  Kind kind() const noexcept { return kind_; }
  bool is_term() const noexcept { return kind_ == Kind::Term; }
  // Empty for And/Or nodes.
  const std::string& phrase() const noexcept { return phrase_; }
  const std::vector<QueryExpr>& children() const noexcept { return children_; }

  std::size_t depth() const noexcept;

  friend bool operator==(const QueryExpr& a, const QueryExpr& b);

 private:
  QueryExpr(Kind kind, std::string phrase, std::vector<QueryExpr> children);
  static QueryExpr combine(Kind kind, std::vector<QueryExpr> children);

  Kind kind_;
  std::string phrase_;
  std::vector<QueryExpr> children_;
};

class QueryParseError : public std::runtime_error {
 public:
  QueryParseError(const std::string& message, std::size_t offset);
  // Byte offset into the query text where the problem was detected.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Per-source query syntax. Generic is plain infix text; the others wrap it.
enum class QueryDialect { Generic, TitleAbsKey, TopicSearch };

// Operators are case-insensitive; AND binds tighter than OR; parentheses
// group. Adjacent phrases/groups without an operator are a syntax error.
QueryExpr parse_query(std::string_view text);

// OR groups are always parenthesized. Generic output re-parses to an equal
// expression.
std::string render_query(const QueryExpr& expr, QueryDialect dialect = QueryDialect::Generic);

// Inverse of the dialect wrapper added by render_query. Returns the input
// unchanged when the wrapper is not present.
std::string_view strip_dialect(std::string_view rendered, QueryDialect dialect);

// Distinct term phrases in first-appearance (left-to-right) order.
std::vector<std::string> query_terms(const QueryExpr& expr);

using TermCounts = std::map<std::string, std::size_t>;

// Case-insensitive whole-word occurrence counts for every distinct term.
// Multiword phrases match contiguous word sequences.
TermCounts term_frequencies(const QueryExpr& expr, std::string_view text);

bool matches(const QueryExpr& expr, std::string_view text);

// Evaluates the expression against precomputed counts (a missing term
// counts as zero).
bool satisfied_by(const QueryExpr& expr, const TermCounts& counts);

}  // namespace litharvest

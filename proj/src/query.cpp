#include "litharvest/query.hpp"

#include "litharvest/text.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

namespace litharvest {
namespace {

bool is_operator_word(std::string_view w) { return text::iequals(w, "and") || text::iequals(w, "or"); }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Splits on ASCII whitespace and rejoins with single spaces.
std::string collapse_spaces(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) {
      if (!out.empty()) out.push_back(' ');
      out.append(s.substr(start, i - start));
    }
  }
  return out;
}

}  // namespace

QueryExpr::QueryExpr(Kind kind, std::string phrase, std::vector<QueryExpr> children)
    : kind_(kind), phrase_(std::move(phrase)), children_(std::move(children)) {}

QueryExpr QueryExpr::term(std::string_view phrase) {
  std::string collapsed = collapse_spaces(phrase);
  if (collapsed.empty()) throw std::invalid_argument("query term must not be empty");
  if (collapsed.find_first_of("()") != std::string::npos) {
    throw std::invalid_argument("query term must not contain parentheses: " + collapsed);
  }
  std::size_t start = 0;
  while (start <= collapsed.size()) {
    auto end = collapsed.find(' ', start);
    if (end == std::string::npos) end = collapsed.size();
    if (is_operator_word(std::string_view(collapsed).substr(start, end - start))) {
      throw std::invalid_argument("query term must not contain operator words: " + collapsed);
    }
    start = end + 1;
  }
  return QueryExpr(Kind::Term, std::move(collapsed), {});
}

QueryExpr QueryExpr::combine(Kind kind, std::vector<QueryExpr> children) {
  std::vector<QueryExpr> flat;
  flat.reserve(children.size());
  for (auto& child : children) {
    if (child.kind_ == kind) {
      for (auto& grandchild : child.children_) flat.push_back(std::move(grandchild));
    } else {
      flat.push_back(std::move(child));
    }
  }
  if (flat.size() < 2) throw std::invalid_argument("AND/OR node needs at least two operands");
  return QueryExpr(kind, {}, std::move(flat));
}

QueryExpr QueryExpr::all_of(std::vector<QueryExpr> children) { return combine(Kind::And, std::move(children)); }
QueryExpr QueryExpr::any_of(std::vector<QueryExpr> children) { return combine(Kind::Or, std::move(children)); }

std::size_t QueryExpr::depth() const noexcept {
  std::size_t deepest = 0;
  for (const auto& child : children_) deepest = std::max(deepest, child.depth());
  return deepest + 1;
}

bool operator==(const QueryExpr& a, const QueryExpr& b) {
  return a.kind_ == b.kind_ && a.phrase_ == b.phrase_ && a.children_ == b.children_;
}

QueryParseError::QueryParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum class Type { Word, And, Or, LParen, RParen, End } type;
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
    } else if (s[i] == '(' || s[i] == ')') {
      tokens.push_back({s[i] == '(' ? Token::Type::LParen : Token::Type::RParen, s.substr(i, 1), i});
      ++i;
    } else {
      const std::size_t start = i;
      while (i < s.size() && !is_space(s[i]) && s[i] != '(' && s[i] != ')') ++i;
      const auto word = s.substr(start, i - start);
      auto type = Token::Type::Word;
      if (text::iequals(word, "and")) type = Token::Type::And;
      else if (text::iequals(word, "or")) type = Token::Type::Or;
      tokens.push_back({type, word, start});
    }
  }
  tokens.push_back({Token::Type::End, {}, s.size()});
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::string_view source) : tokens_(tokenize(source)) {}

  QueryExpr parse() {
    if (peek().type == Token::Type::End) throw QueryParseError("empty query", 0);
    QueryExpr expr = parse_or();
    const Token& t = peek();
    if (t.type == Token::Type::RParen) throw QueryParseError("unbalanced ')'", t.offset);
    if (t.type != Token::Type::End) throw QueryParseError("missing operator before '" + std::string(t.text) + "'", t.offset);
    return expr;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  QueryExpr parse_or() {
    std::vector<QueryExpr> operands;
    operands.push_back(parse_and());
    while (peek().type == Token::Type::Or) {
      next();
      operands.push_back(parse_and());
    }
    return operands.size() == 1 ? std::move(operands.front()) : QueryExpr::any_of(std::move(operands));
  }

  QueryExpr parse_and() {
    std::vector<QueryExpr> operands;
    operands.push_back(parse_primary());
    while (peek().type == Token::Type::And) {
      next();
      operands.push_back(parse_primary());
    }
    return operands.size() == 1 ? std::move(operands.front()) : QueryExpr::all_of(std::move(operands));
  }

  QueryExpr parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case Token::Type::LParen: {
        next();
        if (peek().type == Token::Type::RParen) throw QueryParseError("empty group", t.offset);
        QueryExpr inner = parse_or();
        if (peek().type != Token::Type::RParen) {
          if (peek().type == Token::Type::End) throw QueryParseError("unbalanced '('", t.offset);
          throw QueryParseError("missing operator before '" + std::string(peek().text) + "'", peek().offset);
        }
        next();
        return inner;
      }
      case Token::Type::Word: {
        const std::size_t first = pos_;
        while (peek().type == Token::Type::Word) next();
        std::string phrase;
        for (std::size_t i = first; i < pos_; ++i) {
          if (!phrase.empty()) phrase.push_back(' ');
          phrase.append(tokens_[i].text);
        }
        return QueryExpr::term(phrase);
      }
      case Token::Type::And:
      case Token::Type::Or:
        throw QueryParseError("dangling operator '" + std::string(t.text) + "'", t.offset);
      case Token::Type::RParen:
        throw QueryParseError("unexpected ')'", t.offset);
      case Token::Type::End:
        break;
    }
    throw QueryParseError("query ends where an operand is expected", t.offset);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

void render_generic(const QueryExpr& expr, std::string& out) {
  switch (expr.kind()) {
    case QueryExpr::Kind::Term:
      out += expr.phrase();
      return;
    case QueryExpr::Kind::And:
    case QueryExpr::Kind::Or: {
      const bool is_or = expr.kind() == QueryExpr::Kind::Or;
      if (is_or) out.push_back('(');
      bool first = true;
      for (const auto& child : expr.children()) {
        if (!first) out += is_or ? " OR " : " AND ";
        first = false;
        render_generic(child, out);
      }
      if (is_or) out.push_back(')');
      return;
    }
  }
}

constexpr std::string_view kTitleAbsKeyOpen = "TITLE-ABS-KEY(";
constexpr std::string_view kTopicSearchOpen = "TS=(";

void collect_terms(const QueryExpr& expr, std::vector<std::string>& out, std::set<std::string>& seen) {
  if (expr.is_term()) {
    if (seen.insert(expr.phrase()).second) out.push_back(expr.phrase());
    return;
  }
  for (const auto& child : expr.children()) collect_terms(child, out, seen);
}

std::size_t count_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) ++count;
  }
  return count;
}

}  // namespace

QueryExpr parse_query(std::string_view text) { return Parser(text).parse(); }

std::string render_query(const QueryExpr& expr, QueryDialect dialect) {
  std::string generic;
  render_generic(expr, generic);
  switch (dialect) {
    case QueryDialect::Generic:
      return generic;
    case QueryDialect::TitleAbsKey:
      return std::string(kTitleAbsKeyOpen) + generic + ")";
    case QueryDialect::TopicSearch:
      return std::string(kTopicSearchOpen) + generic + ")";
  }
  return generic;
}

std::string_view strip_dialect(std::string_view rendered, QueryDialect dialect) {
  std::string_view open;
  switch (dialect) {
    case QueryDialect::Generic:
      return rendered;
    case QueryDialect::TitleAbsKey:
      open = kTitleAbsKeyOpen;
      break;
    case QueryDialect::TopicSearch:
      open = kTopicSearchOpen;
      break;
  }
  if (rendered.size() > open.size() && rendered.starts_with(open) && rendered.ends_with(')')) {
    return rendered.substr(open.size(), rendered.size() - open.size() - 1);
  }
  return rendered;
}

std::vector<std::string> query_terms(const QueryExpr& expr) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  collect_terms(expr, out, seen);
  return out;
}

TermCounts term_frequencies(const QueryExpr& expr, std::string_view document) {
  const auto doc_words = text::words(document);
  TermCounts counts;
  for (const auto& phrase : query_terms(expr)) {
    counts[phrase] = count_sequence(doc_words, text::words(phrase));
  }
  return counts;
}

bool satisfied_by(const QueryExpr& expr, const TermCounts& counts) {
  switch (expr.kind()) {
    case QueryExpr::Kind::Term: {
      const auto it = counts.find(expr.phrase());
      return it != counts.end() && it->second > 0;
    }
    case QueryExpr::Kind::And:
      return std::all_of(expr.children().begin(), expr.children().end(),
                         [&](const QueryExpr& c) { return satisfied_by(c, counts); });
    case QueryExpr::Kind::Or:
      return std::any_of(expr.children().begin(), expr.children().end(),
                         [&](const QueryExpr& c) { return satisfied_by(c, counts); });
  }
  return false;
}

bool matches(const QueryExpr& expr, std::string_view document) {
  return satisfied_by(expr, term_frequencies(expr, document));
}

}  // namespace litharvest

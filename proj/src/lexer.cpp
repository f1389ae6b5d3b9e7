#include "sqlstruct/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace sqlstruct {

namespace {

bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

// Sorted, uppercase.
constexpr std::array<std::string_view, 62> kReserved = {
    "ALL",       "AND",       "AS",         "ASC",     "BETWEEN",   "BY",      "CASE",    "CAST",
    "COLLATE",   "CROSS",     "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "DEFAULT",
    "DELETE",    "DESC",      "DISTINCT",   "DROP",    "ELSE",      "END",     "ESCAPE",  "EXCEPT",
    "EXISTS",    "FALSE",     "FROM",       "FULL",    "GLOB",      "GROUP",   "HAVING",  "IN",
    "INNER",     "INSERT",    "INTERSECT",  "INTO",    "IS",        "ISNULL",  "JOIN",    "LEFT",
    "LIKE",      "LIMIT",     "MATCH",      "NATURAL", "NOT",       "NOTNULL", "NULL",    "OFFSET",
    "ON",        "OR",        "ORDER",      "OUTER",   "REGEXP",    "RIGHT",   "SELECT",  "SET",
    "THEN",      "TRUE",      "UNION",      "UPDATE",  "USING",     "VALUES",  "WHEN",    "WHERE",
};

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

bool Token::is_keyword(std::string_view kw) const { return type == TokenType::Word && iequals(text, kw); }

bool is_reserved_word(std::string_view word) {
  static_assert(std::is_sorted(kReserved.begin(), kReserved.end()));
  return std::binary_search(kReserved.begin(), kReserved.end(), to_upper(word));
}

bool is_bare_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  for (unsigned char c : name) {
    if (!(std::isalnum(c) || c == '_')) return false;
  }
  return !is_reserved_word(name);
}

std::vector<Token> tokenize(std::string_view sql, std::optional<LexError>* error) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = sql.size();

  auto fail = [&](std::string msg, std::size_t at) {
    if (error != nullptr) *error = LexError{std::move(msg), at};
    tokens.push_back(Token{TokenType::End, {}, at, 0});
    return tokens;
  };

  while (i < n) {
    const auto c = static_cast<unsigned char>(sql[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      const auto close = sql.find("*/", i + 2);
      if (close == std::string_view::npos) return fail("unterminated comment", i);
      i = close + 2;
      continue;
    }

    const std::size_t start = i;
    if (is_word_start(c)) {
      while (i < n && is_word_char(static_cast<unsigned char>(sql[i]))) ++i;
      tokens.push_back({TokenType::Word, std::string(sql.substr(start, i - start)), start, i - start});
      continue;
    }
    if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      if (c == '0' && i + 1 < n && (sql[i + 1] == 'x' || sql[i + 1] == 'X')) {
        i += 2;
        while (i < n && std::isxdigit(static_cast<unsigned char>(sql[i]))) ++i;
      } else {
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        if (i < n && sql[i] == '.') {
          ++i;
          while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        }
        if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
          if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
            i = j;
            while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
          }
        }
      }
      if (i < n && is_word_char(static_cast<unsigned char>(sql[i]))) return fail("malformed number", start);
      tokens.push_back({TokenType::Number, std::string(sql.substr(start, i - start)), start, i - start});
      continue;
    }
    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : static_cast<char>(c);
      std::string value;
      ++i;
      bool closed = false;
      while (i < n) {
        if (sql[i] == close) {
          if (close != ']' && i + 1 < n && sql[i + 1] == close) {
            value.push_back(close);
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value.push_back(sql[i++]);
      }
      if (!closed) return fail(c == '\'' ? "unterminated string literal" : "unterminated quoted identifier", start);
      tokens.push_back({c == '\'' ? TokenType::String : TokenType::QuotedName, std::move(value), start, i - start});
      continue;
    }
    if (c == '?' || ((c == ':' || c == '@' || c == '$') && i + 1 < n &&
                     is_word_char(static_cast<unsigned char>(sql[i + 1])))) {
      ++i;
      while (i < n && is_word_char(static_cast<unsigned char>(sql[i]))) ++i;
      tokens.push_back({TokenType::Parameter, std::string(sql.substr(start, i - start)), start, i - start});
      continue;
    }

    static constexpr std::array<std::string_view, 10> kTwoChar = {"||", "<=", ">=", "<>", "!=", "==",
                                                                   "<<", ">>", "->", "::"};
    if (i + 2 < n + 0 && sql.substr(i, 3) == "->>") {
      tokens.push_back({TokenType::Symbol, "->>", start, 3});
      i += 3;
      continue;
    }
    if (i + 1 < n) {
      const auto two = sql.substr(i, 2);
      if (std::find(kTwoChar.begin(), kTwoChar.end(), two) != kTwoChar.end()) {
        tokens.push_back({TokenType::Symbol, std::string(two), start, 2});
        i += 2;
        continue;
      }
    }
    static constexpr std::string_view kSingle = "=<>+-*/%&|~(),.;";
    if (kSingle.find(static_cast<char>(c)) != std::string_view::npos) {
      tokens.push_back({TokenType::Symbol, std::string(1, static_cast<char>(c)), start, 1});
      ++i;
      continue;
    }
    return fail(std::string("unexpected character '") + static_cast<char>(c) + "'", start);
  }
  tokens.push_back({TokenType::End, {}, n, 0});
  return tokens;
}

}  // namespace sqlstruct

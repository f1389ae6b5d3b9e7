#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqlstruct {

enum class TokenType {
  Word,        // bare identifier or keyword
  QuotedName,  // "x", `x`, [x]
  String,      // 'x'
  Number,
  Parameter,   // ?, ?1, :name, @name, $name
  Symbol,      // operators and punctuation
  End,
};

struct Token {
  TokenType type = TokenType::End;
  std::string text;     // unquoted value for QuotedName/String, raw spelling otherwise
  std::size_t offset = 0;
  std::size_t length = 0;

  [[nodiscard]] bool is_symbol(std::string_view s) const { return type == TokenType::Symbol && text == s; }
  /// Case-insensitive keyword test; only bare words qualify.
  [[nodiscard]] bool is_keyword(std::string_view kw) const;
};

struct LexError {
  std::string message;
  std::size_t offset = 0;
};

/// Tokenizes SQLite SQL. Comments are skipped. The returned vector always ends
/// with an End token. Returns LexError on unterminated literals or stray bytes.
std::vector<Token> tokenize(std::string_view sql, std::optional<LexError>* error = nullptr);

/// Words that cannot be used as bare identifiers or implicit aliases.
bool is_reserved_word(std::string_view word);

/// True when `name` can be written without quotes: [A-Za-z_][A-Za-z0-9_]* and not reserved.
bool is_bare_identifier(std::string_view name);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

}  // namespace sqlstruct

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "sqlstruct/ast.hpp"

namespace sqlstruct {

enum class Dialect { Sqlite };

/// Maps a dialect id string ("sqlite", case-insensitive). Throws std::invalid_argument otherwise.
Dialect parse_dialect(std::string_view id);

enum class ParseFailureReason { Syntax, Unsupported, EmptyInput };

std::string_view to_string(ParseFailureReason reason);

struct ParseFailure {
  ParseFailureReason reason = ParseFailureReason::Syntax;
  std::optional<std::size_t> offset;
  std::string message;

  bool operator==(const ParseFailure&) const = default;
};

using ParseResult = std::variant<SqlAst, ParseFailure>;

/// Parses a single SQLite SELECT statement (optionally terminated by semicolons).
///
/// Supported: WITH (non-recursive), compound selects, joins of every SQLite
/// flavour, derived tables, scalar/IN/EXISTS subqueries, CASE, CAST, COLLATE,
/// LIKE/GLOB/BETWEEN/IS and the full SQLite operator precedence table.
/// Data-modifying statements, window functions, VALUES, recursive CTEs and
/// parenthesized join groups are reported as Unsupported.
ParseResult parse_sql(std::string_view text, Dialect dialect = Dialect::Sqlite);

inline bool parsed(const ParseResult& r) { return std::holds_alternative<SqlAst>(r); }

}  // namespace sqlstruct

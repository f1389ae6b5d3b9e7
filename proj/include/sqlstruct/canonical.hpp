#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <variant>

#include "sqlstruct/ast.hpp"
#include "sqlstruct/parser.hpp"

namespace sqlstruct {

/// Canonical rendered form of a query. Equal keys mean equal structure.
struct StructureKey {
  std::string key;
  /// 64-bit FNV-1a of the key bytes, 16 lowercase hex digits.
  std::string digest;

  bool operator==(const StructureKey& other) const { return key == other.key; }
  std::strong_ordering operator<=>(const StructureKey& other) const { return key <=> other.key; }
};

using KeyResult = std::variant<StructureKey, ParseFailure>;

/// FNV-1a 64 (offset basis 0xcbf29ce484222325, prime 0x100000001b3) as hex.
std::string key_digest(std::string_view key);

StructureKey make_structure_key(std::string key);

/// Text-level normalization:
///   1. trim, drop trailing semicolons
///   2. line breaks become spaces, whitespace runs collapse to one space
///   3. `<column> AS <name>` in a select list loses its alias when the
///      aliased expression is a bare (optionally qualified) column
///   4. lowercase
std::string normalize_text(std::string_view sql);

/// AST-level canonicalization. Table aliases become t1, t2, ... in order of
/// first appearance within each query scope (FROM source first, then joins in
/// source order); qualifiers are rewritten to match. Every maximal AND chain is
/// flattened, its conjuncts sorted bytewise by normalized rendered text, and
/// rebuilt left-deep. Subqueries are processed recursively with their own
/// alias counter.
SqlAst canonicalize_ast(SqlAst ast);

/// parse_sql -> canonicalize_ast -> render -> normalize_text.
KeyResult canonical_key(std::string_view text, Dialect dialect = Dialect::Sqlite);

inline bool has_key(const KeyResult& r) { return std::holds_alternative<StructureKey>(r); }

}  // namespace sqlstruct

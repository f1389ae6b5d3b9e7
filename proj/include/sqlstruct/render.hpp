#pragma once

#include <string>
#include <string_view>

#include "sqlstruct/ast.hpp"

namespace sqlstruct {

/// Renders an AST back to SQLite SQL: keywords uppercase, one space between
/// tokens, parentheses only where operator precedence requires them.
/// Explicit ASC is dropped; `==` and `!=` were already folded to `=` and `<>`
/// by the parser.
std::string render(const SqlAst& ast);
std::string render(const Node& node);

/// Writes an identifier bare when it is a plain word and not reserved,
/// otherwise double-quoted with embedded quotes doubled.
std::string render_identifier(std::string_view name);

}  // namespace sqlstruct

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sqlstruct {

/// Operator category of an AST node.
///
/// Child layout per kind:
///   Query        [With?] body                 body is Select or Compound
///   With         Cte+
///   Cte          Query                        text = name
///   Compound     left right [OrderBy] [Limit] text = UNION | UNION ALL | INTERSECT | EXCEPT
///   Select       ResultColumn+ [From] [Where] [GroupBy] [Having] [OrderBy] [Limit]
///                                             flag = DISTINCT
///   ResultColumn expr                         alias = output name
///   From         source Join*
///   Join         source [On | Using]          text = join words (",", "JOIN", "LEFT JOIN", ...)
///   Table        -                            text = name, qualifier = schema, alias
///   DerivedTable Query                        alias
///   On           expr
///   Using        Column+
///   Where        expr
///   GroupBy      expr+
///   Having       expr
///   OrderBy      Ordering+
///   Ordering     expr                         flag = DESC, text = "" | NULLS FIRST | NULLS LAST
///   Limit        count [offset]
///
/// Expressions:
///   Column       -                            text = name, qualifier = table
///   Star         -                            qualifier = table for `t.*`
///   Number, String, Null, Keyword, Parameter  text = literal spelling
///   Function     arg*                         text = name, flag = DISTINCT
///   Binary       left right [escape]          text = operator (AND, OR, =, <>, LIKE, NOT LIKE, IS, ...)
///   Unary        operand                      text = NOT | - | + | ~
///   Between      expr low high                flag = NOT
///   InList       expr item*                   flag = NOT
///   InQuery      expr Query                   flag = NOT
///   Exists       Query
///   Subquery     Query
///   Case         [operand] When+ [Else]
///   When         condition result
///   Else         result
///   Cast         expr                         text = type name
///   Collate      expr                         text = collation
enum class NodeKind : std::uint8_t {
  Query,
  With,
  Cte,
  Compound,
  Select,
  ResultColumn,
  From,
  Join,
  Table,
  DerivedTable,
  On,
  Using,
  Where,
  GroupBy,
  Having,
  OrderBy,
  Ordering,
  Limit,
  Column,
  Star,
  Number,
  String,
  Null,
  Keyword,
  Parameter,
  Function,
  Binary,
  Unary,
  Between,
  InList,
  InQuery,
  Exists,
  Subquery,
  Case,
  When,
  Else,
  Cast,
  Collate,
};

std::string_view to_string(NodeKind kind);

struct Node {
  NodeKind kind = NodeKind::Null;
  std::string text;
  std::string qualifier;
  std::string alias;
  bool flag = false;
  std::vector<Node> children;

  Node() = default;
  Node(NodeKind k, std::string t = {}) : kind(k), text(std::move(t)) {}

  [[nodiscard]] const Node* find(NodeKind k) const;
  Node* find(NodeKind k);

  bool operator==(const Node&) const = default;
};

/// A parsed SQL statement. The root is always a Query node.
struct SqlAst {
  Node root;

  bool operator==(const SqlAst&) const = default;
};

/// True for expression node kinds (anything that may appear inside a predicate).
bool is_expression(NodeKind kind);

/// Visits every node in pre-order.
template <typename Fn>
void walk(const Node& node, Fn&& fn) {
  fn(node);
  for (const auto& child : node.children) walk(child, fn);
}

template <typename Fn>
void walk(Node& node, Fn&& fn) {
  fn(node);
  for (auto& child : node.children) walk(child, fn);
}

}  // namespace sqlstruct

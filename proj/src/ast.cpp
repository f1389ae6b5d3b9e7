#include "sqlstruct/ast.hpp"

namespace sqlstruct {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Query: return "query";
    case NodeKind::With: return "with";
    case NodeKind::Cte: return "cte";
    case NodeKind::Compound: return "compound";
    case NodeKind::Select: return "select";
    case NodeKind::ResultColumn: return "result_column";
    case NodeKind::From: return "from";
    case NodeKind::Join: return "join";
    case NodeKind::Table: return "table";
    case NodeKind::DerivedTable: return "derived_table";
    case NodeKind::On: return "on";
    case NodeKind::Using: return "using";
    case NodeKind::Where: return "where";
    case NodeKind::GroupBy: return "group_by";
    case NodeKind::Having: return "having";
    case NodeKind::OrderBy: return "order_by";
    case NodeKind::Ordering: return "ordering";
    case NodeKind::Limit: return "limit";
    case NodeKind::Column: return "column";
    case NodeKind::Star: return "star";
    case NodeKind::Number: return "number";
    case NodeKind::String: return "string";
    case NodeKind::Null: return "null";
    case NodeKind::Keyword: return "keyword";
    case NodeKind::Parameter: return "parameter";
    case NodeKind::Function: return "function";
    case NodeKind::Binary: return "binary";
    case NodeKind::Unary: return "unary";
    case NodeKind::Between: return "between";
    case NodeKind::InList: return "in_list";
    case NodeKind::InQuery: return "in_query";
    case NodeKind::Exists: return "exists";
    case NodeKind::Subquery: return "subquery";
    case NodeKind::Case: return "case";
    case NodeKind::When: return "when";
    case NodeKind::Else: return "else";
    case NodeKind::Cast: return "cast";
    case NodeKind::Collate: return "collate";
  }
  return "unknown";
}

const Node* Node::find(NodeKind k) const {
  for (const auto& c : children) {
    if (c.kind == k) return &c;
  }
  return nullptr;
}

Node* Node::find(NodeKind k) {
  for (auto& c : children) {
    if (c.kind == k) return &c;
  }
  return nullptr;
}

bool is_expression(NodeKind kind) {
  switch (kind) {
    case NodeKind::Column:
    case NodeKind::Star:
    case NodeKind::Number:
    case NodeKind::String:
    case NodeKind::Null:
    case NodeKind::Keyword:
    case NodeKind::Parameter:
    case NodeKind::Function:
    case NodeKind::Binary:
    case NodeKind::Unary:
    case NodeKind::Between:
    case NodeKind::InList:
    case NodeKind::InQuery:
    case NodeKind::Exists:
    case NodeKind::Subquery:
    case NodeKind::Case:
    case NodeKind::Cast:
    case NodeKind::Collate:
      return true;
    default:
      return false;
  }
}

}  // namespace sqlstruct

#include "sqlstruct/render.hpp"

#include <stdexcept>

#include "sqlstruct/lexer.hpp"

namespace sqlstruct {

namespace {

constexpr int kPrimary = 12;

int binary_precedence(std::string_view op) {
  if (op == "OR") return 1;
  if (op == "AND") return 2;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return 5;
  if (op == "&" || op == "|" || op == "<<" || op == ">>") return 6;
  if (op == "+" || op == "-") return 7;
  if (op == "*" || op == "/" || op == "%") return 8;
  if (op == "||" || op == "->" || op == "->>") return 9;
  return 4;  // =, <>, IS, IS NOT, [NOT] LIKE/GLOB/MATCH/REGEXP
}

int precedence(const Node& node) {
  switch (node.kind) {
    case NodeKind::Binary:
      return binary_precedence(node.text);
    case NodeKind::Unary:
      return node.text == "NOT" ? 3 : 10;
    case NodeKind::Between:
    case NodeKind::InList:
    case NodeKind::InQuery:
      return 4;
    case NodeKind::Collate:
      return 11;
    default:
      return kPrimary;
  }
}

class Renderer {
 public:
  std::string out;

  void emit(std::string_view s) { out += s; }

  void expr_min(const Node& node, int min_prec) {
    if (precedence(node) < min_prec) {
      out += '(';
      node_(node);
      out += ')';
    } else {
      node_(node);
    }
  }

  template <typename It>
  void list(It begin, It end, std::string_view sep = ", ") {
    bool first = true;
    for (auto it = begin; it != end; ++it) {
      if (!first) emit(sep);
      first = false;
      node_(*it);
    }
  }

  void qualified(const std::string& qualifier, const std::string& name) {
    if (!qualifier.empty()) {
      emit(render_identifier(qualifier));
      emit(".");
    }
    emit(render_identifier(name));
  }

  void alias(const std::string& a) {
    if (a.empty()) return;
    emit(" AS ");
    emit(render_identifier(a));
  }

  void node_(const Node& n) {
    switch (n.kind) {
      case NodeKind::Query:
        for (const auto& c : n.children) {
          if (c.kind == NodeKind::With) {
            node_(c);
            emit(" ");
          } else {
            node_(c);
          }
        }
        return;
      case NodeKind::With:
        emit("WITH ");
        list(n.children.begin(), n.children.end());
        return;
      case NodeKind::Cte:
        emit(render_identifier(n.text));
        emit(" AS (");
        node_(n.children.at(0));
        emit(")");
        return;
      case NodeKind::Compound:
        node_(n.children.at(0));
        emit(" ");
        emit(n.text);
        emit(" ");
        node_(n.children.at(1));
        for (std::size_t i = 2; i < n.children.size(); ++i) {
          emit(" ");
          node_(n.children[i]);
        }
        return;
      case NodeKind::Select: {
        emit(n.flag ? "SELECT DISTINCT " : "SELECT ");
        bool first = true;
        for (const auto& c : n.children) {
          if (c.kind == NodeKind::ResultColumn) {
            if (!first) emit(", ");
            first = false;
            node_(c);
          } else {
            emit(" ");
            node_(c);
          }
        }
        return;
      }
      case NodeKind::ResultColumn:
        node_(n.children.at(0));
        alias(n.alias);
        return;
      case NodeKind::From:
        emit("FROM ");
        for (const auto& c : n.children) {
          if (c.kind == NodeKind::Join) {
            if (c.text != ",") emit(" ");
            node_(c);
          } else {
            node_(c);
          }
        }
        return;
      case NodeKind::Join:
        emit(c_join_op(n.text));
        node_(n.children.at(0));
        if (n.children.size() > 1) {
          emit(" ");
          node_(n.children[1]);
        }
        return;
      case NodeKind::Table:
        qualified(n.qualifier, n.text);
        alias(n.alias);
        return;
      case NodeKind::DerivedTable:
        emit("(");
        node_(n.children.at(0));
        emit(")");
        alias(n.alias);
        return;
      case NodeKind::On:
        emit("ON ");
        node_(n.children.at(0));
        return;
      case NodeKind::Using:
        emit("USING (");
        list(n.children.begin(), n.children.end());
        emit(")");
        return;
      case NodeKind::Where:
        emit("WHERE ");
        node_(n.children.at(0));
        return;
      case NodeKind::GroupBy:
        emit("GROUP BY ");
        list(n.children.begin(), n.children.end());
        return;
      case NodeKind::Having:
        emit("HAVING ");
        node_(n.children.at(0));
        return;
      case NodeKind::OrderBy:
        emit("ORDER BY ");
        list(n.children.begin(), n.children.end());
        return;
      case NodeKind::Ordering:
        node_(n.children.at(0));
        if (n.flag) emit(" DESC");
        if (!n.text.empty()) {
          emit(" ");
          emit(n.text);
        }
        return;
      case NodeKind::Limit:
        emit("LIMIT ");
        node_(n.children.at(0));
        if (n.children.size() > 1) {
          emit(" OFFSET ");
          node_(n.children[1]);
        }
        return;
      case NodeKind::Column:
        qualified(n.qualifier, n.text);
        return;
      case NodeKind::Star:
        if (!n.qualifier.empty()) {
          emit(render_identifier(n.qualifier));
          emit(".");
        }
        emit("*");
        return;
      case NodeKind::Number:
      case NodeKind::Keyword:
      case NodeKind::Parameter:
        emit(n.text);
        return;
      case NodeKind::Null:
        emit("NULL");
        return;
      case NodeKind::String: {
        out += '\'';
        for (char c : n.text) {
          if (c == '\'') out += '\'';
          out += c;
        }
        out += '\'';
        return;
      }
      case NodeKind::Function:
        emit(to_upper(n.text));
        emit(n.flag ? "(DISTINCT " : "(");
        list(n.children.begin(), n.children.end());
        emit(")");
        return;
      case NodeKind::Binary: {
        const int p = binary_precedence(n.text);
        expr_min(n.children.at(0), p);
        emit(" ");
        emit(n.text);
        emit(" ");
        expr_min(n.children.at(1), p + 1);
        if (n.children.size() > 2) {
          emit(" ESCAPE ");
          expr_min(n.children[2], p + 1);
        }
        return;
      }
      case NodeKind::Unary: {
        const Node& operand = n.children.at(0);
        if (n.text == "NOT") {
          emit("NOT ");
          expr_min(operand, 3);
          return;
        }
        emit(n.text);
        Renderer inner;
        inner.expr_min(operand, 10);
        // "--" would start a comment.
        if (!inner.out.empty() && (inner.out.front() == '-' || inner.out.front() == '+')) emit(" ");
        emit(inner.out);
        return;
      }
      case NodeKind::Between:
        expr_min(n.children.at(0), 4);
        emit(n.flag ? " NOT BETWEEN " : " BETWEEN ");
        expr_min(n.children.at(1), 5);
        emit(" AND ");
        expr_min(n.children.at(2), 5);
        return;
      case NodeKind::InList:
        expr_min(n.children.at(0), 4);
        emit(n.flag ? " NOT IN (" : " IN (");
        list(n.children.begin() + 1, n.children.end());
        emit(")");
        return;
      case NodeKind::InQuery:
        expr_min(n.children.at(0), 4);
        emit(n.flag ? " NOT IN (" : " IN (");
        node_(n.children.at(1));
        emit(")");
        return;
      case NodeKind::Exists:
        emit("EXISTS (");
        node_(n.children.at(0));
        emit(")");
        return;
      case NodeKind::Subquery:
        emit("(");
        node_(n.children.at(0));
        emit(")");
        return;
      case NodeKind::Case:
        emit("CASE");
        for (const auto& c : n.children) {
          emit(" ");
          node_(c);
        }
        emit(" END");
        return;
      case NodeKind::When:
        emit("WHEN ");
        node_(n.children.at(0));
        emit(" THEN ");
        node_(n.children.at(1));
        return;
      case NodeKind::Else:
        emit("ELSE ");
        node_(n.children.at(0));
        return;
      case NodeKind::Cast:
        emit("CAST(");
        node_(n.children.at(0));
        emit(" AS ");
        emit(n.text);
        emit(")");
        return;
      case NodeKind::Collate:
        expr_min(n.children.at(0), kPrimary);
        emit(" COLLATE ");
        emit(render_identifier(n.text));
        return;
    }
    throw std::logic_error("render: unknown node kind");
  }

  static std::string c_join_op(const std::string& op) { return op == "," ? ", " : op + " "; }
};

}  // namespace

std::string render_identifier(std::string_view name) {
  if (is_bare_identifier(name)) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string render(const Node& node) {
  Renderer r;
  r.node_(node);
  return std::move(r.out);
}

std::string render(const SqlAst& ast) { return render(ast.root); }

}  // namespace sqlstruct

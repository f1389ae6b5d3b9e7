#include "sqlstruct/parser.hpp"

#include <stdexcept>
#include <utility>

#include "sqlstruct/lexer.hpp"

namespace sqlstruct {

namespace {

struct Failure {
  ParseFailureReason reason;
  std::size_t offset;
  std::string message;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  SqlAst parse_statement() {
    const Token& first = peek();
    if (!first.is_keyword("SELECT") && !first.is_keyword("WITH")) {
      if (first.type == TokenType::Word && starts_other_statement(first.text)) {
        unsupported(first, "only SELECT statements are supported");
      }
      syntax(first, "expected SELECT or WITH");
    }
    SqlAst ast{parse_query()};
    while (peek().is_symbol(";")) advance();
    if (peek().type != TokenType::End) {
      if (peek().type == TokenType::Word && (peek().is_keyword("SELECT") || peek().is_keyword("WITH") ||
                                             starts_other_statement(peek().text))) {
        unsupported(peek(), "multiple statements");
      }
      syntax(peek(), "unexpected token '" + peek().text + "'");
    }
    return ast;
  }

 private:
  static bool starts_other_statement(std::string_view word) {
    static constexpr std::string_view kStatements[] = {"INSERT", "UPDATE", "DELETE", "CREATE",  "DROP",   "ALTER",
                                                       "REPLACE", "PRAGMA", "ATTACH", "DETACH", "VACUUM", "BEGIN",
                                                       "COMMIT",  "ROLLBACK", "EXPLAIN", "VALUES", "ANALYZE", "REINDEX"};
    for (auto kw : kStatements) {
      if (iequals(word, kw)) return true;
    }
    return false;
  }

  [[noreturn]] void syntax(const Token& at, std::string message) {
    throw Failure{ParseFailureReason::Syntax, at.offset, std::move(message)};
  }
  [[noreturn]] void unsupported(const Token& at, std::string message) {
    throw Failure{ParseFailureReason::Unsupported, at.offset, std::move(message)};
  }

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t idx = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[idx];
  }
  const Token& advance() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool accept_keyword(std::string_view kw) {
    if (peek().is_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_symbol(std::string_view s) {
    if (peek().is_symbol(s)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) syntax(peek(), "expected " + std::string(kw));
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) syntax(peek(), "expected '" + std::string(s) + "'");
  }

  bool at_query_start(std::size_t ahead = 0) const {
    return peek(ahead).is_keyword("SELECT") || peek(ahead).is_keyword("WITH") || peek(ahead).is_keyword("VALUES");
  }

  // Identifier in a position where reserved words are not allowed.
  std::string parse_name(std::string_view what) {
    const Token& t = peek();
    if (t.type == TokenType::QuotedName || (t.type == TokenType::Word && !is_reserved_word(t.text))) {
      return advance().text;
    }
    syntax(t, "expected " + std::string(what));
  }

  // Identifier after a '.', where any word is accepted.
  std::string parse_member_name() {
    const Token& t = peek();
    if (t.type == TokenType::QuotedName || t.type == TokenType::Word) return advance().text;
    syntax(t, "expected identifier after '.'");
  }

  std::string parse_optional_alias() {
    if (accept_keyword("AS")) {
      const Token& t = peek();
      if (t.type == TokenType::Word || t.type == TokenType::QuotedName || t.type == TokenType::String) {
        if (t.type == TokenType::Word && is_reserved_word(t.text)) syntax(t, "reserved word used as alias");
        return advance().text;
      }
      syntax(t, "expected alias after AS");
    }
    const Token& t = peek();
    if ((t.type == TokenType::Word && !is_reserved_word(t.text) && !is_soft_clause_word(t.text)) ||
        t.type == TokenType::QuotedName || t.type == TokenType::String) {
      return advance().text;
    }
    return {};
  }

  // Non-reserved words that must not be swallowed as implicit aliases.
  static bool is_soft_clause_word(std::string_view word) {
    return iequals(word, "WINDOW") || iequals(word, "INDEXED") || iequals(word, "RETURNING");
  }

  Node parse_query() {
    Node query(NodeKind::Query);
    if (peek().is_keyword("WITH")) {
      advance();
      if (peek().is_keyword("RECURSIVE")) unsupported(peek(), "recursive common table expressions");
      Node with(NodeKind::With);
      do {
        Node cte(NodeKind::Cte, parse_name("common table expression name"));
        if (peek().is_symbol("(")) unsupported(peek(), "column lists on common table expressions");
        expect_keyword("AS");
        if (peek().is_keyword("NOT") || peek().is_keyword("MATERIALIZED")) {
          unsupported(peek(), "materialization hints");
        }
        expect_symbol("(");
        cte.children.push_back(parse_query());
        expect_symbol(")");
        with.children.push_back(std::move(cte));
      } while (accept_symbol(","));
      query.children.push_back(std::move(with));
    }
    query.children.push_back(parse_compound());
    return query;
  }

  Node parse_compound() {
    Node body = parse_select_core();
    for (;;) {
      std::string op;
      if (peek().is_keyword("UNION")) {
        advance();
        op = accept_keyword("ALL") ? "UNION ALL" : "UNION";
      } else if (peek().is_keyword("INTERSECT")) {
        advance();
        op = "INTERSECT";
      } else if (peek().is_keyword("EXCEPT")) {
        advance();
        op = "EXCEPT";
      } else {
        break;
      }
      Node compound(NodeKind::Compound, std::move(op));
      compound.children.push_back(std::move(body));
      compound.children.push_back(parse_select_core());
      body = std::move(compound);
    }
    if (peek().is_keyword("ORDER")) body.children.push_back(parse_order_by());
    if (peek().is_keyword("LIMIT")) body.children.push_back(parse_limit());
    return body;
  }

  Node parse_select_core() {
    if (peek().is_keyword("VALUES")) unsupported(peek(), "VALUES clauses");
    if (peek().is_symbol("(")) syntax(peek(), "parenthesized compound operand");
    expect_keyword("SELECT");
    Node select(NodeKind::Select);
    if (accept_keyword("DISTINCT")) {
      select.flag = true;
    } else {
      accept_keyword("ALL");
    }
    do {
      select.children.push_back(parse_result_column());
    } while (accept_symbol(","));

    if (accept_keyword("FROM")) select.children.push_back(parse_from());
    if (accept_keyword("WHERE")) {
      Node where(NodeKind::Where);
      where.children.push_back(parse_expr());
      select.children.push_back(std::move(where));
    }
    if (peek().is_keyword("GROUP")) {
      advance();
      expect_keyword("BY");
      Node group(NodeKind::GroupBy);
      do {
        group.children.push_back(parse_expr());
      } while (accept_symbol(","));
      select.children.push_back(std::move(group));
    }
    if (accept_keyword("HAVING")) {
      Node having(NodeKind::Having);
      having.children.push_back(parse_expr());
      select.children.push_back(std::move(having));
    }
    if (peek().is_keyword("WINDOW")) unsupported(peek(), "WINDOW clauses");
    return select;
  }

  Node parse_result_column() {
    Node column(NodeKind::ResultColumn);
    if (peek().is_symbol("*")) {
      advance();
      column.children.emplace_back(NodeKind::Star);
      return column;
    }
    column.children.push_back(parse_expr());
    if (column.children.front().kind != NodeKind::Star) column.alias = parse_optional_alias();
    return column;
  }

  Node parse_from() {
    Node from(NodeKind::From);
    from.children.push_back(parse_source());
    for (;;) {
      std::string op;
      if (accept_symbol(",")) {
        op = ",";
      } else {
        const std::size_t save = pos_;
        std::string words;
        auto add = [&](std::string_view w) {
          if (!words.empty()) words += ' ';
          words += w;
        };
        if (accept_keyword("NATURAL")) add("NATURAL");
        if (accept_keyword("LEFT")) {
          add("LEFT");
          if (accept_keyword("OUTER")) add("OUTER");
        } else if (accept_keyword("RIGHT")) {
          add("RIGHT");
          if (accept_keyword("OUTER")) add("OUTER");
        } else if (accept_keyword("FULL")) {
          add("FULL");
          if (accept_keyword("OUTER")) add("OUTER");
        } else if (accept_keyword("INNER")) {
          add("INNER");
        } else if (accept_keyword("CROSS")) {
          add("CROSS");
        }
        if (!accept_keyword("JOIN")) {
          if (!words.empty()) syntax(peek(), "expected JOIN");
          pos_ = save;
          break;
        }
        add("JOIN");
        op = std::move(words);
      }
      Node join(NodeKind::Join, std::move(op));
      join.children.push_back(parse_source());
      if (accept_keyword("ON")) {
        Node on(NodeKind::On);
        on.children.push_back(parse_expr());
        join.children.push_back(std::move(on));
      } else if (accept_keyword("USING")) {
        Node using_(NodeKind::Using);
        expect_symbol("(");
        do {
          Node col(NodeKind::Column, parse_name("column name"));
          using_.children.push_back(std::move(col));
        } while (accept_symbol(","));
        expect_symbol(")");
        join.children.push_back(std::move(using_));
      }
      from.children.push_back(std::move(join));
    }
    return from;
  }

  Node parse_source() {
    if (peek().is_symbol("(")) {
      if (!at_query_start(1)) unsupported(peek(), "parenthesized join groups");
      advance();
      Node derived(NodeKind::DerivedTable);
      derived.children.push_back(parse_query());
      expect_symbol(")");
      derived.alias = parse_optional_alias();
      return derived;
    }
    Node table(NodeKind::Table, parse_name("table name"));
    if (accept_symbol(".")) {
      table.qualifier = std::move(table.text);
      table.text = parse_member_name();
    }
    if (peek().is_symbol("(")) unsupported(peek(), "table-valued functions");
    table.alias = parse_optional_alias();
    if (peek().is_keyword("INDEXED") || (peek().is_keyword("NOT") && peek(1).is_keyword("INDEXED"))) {
      unsupported(peek(), "index hints");
    }
    return table;
  }

  Node parse_order_by() {
    expect_keyword("ORDER");
    expect_keyword("BY");
    Node order(NodeKind::OrderBy);
    do {
      Node term(NodeKind::Ordering);
      term.children.push_back(parse_expr());
      if (accept_keyword("DESC")) {
        term.flag = true;
      } else {
        accept_keyword("ASC");
      }
      if (accept_keyword("NULLS")) {
        if (accept_keyword("FIRST")) {
          term.text = "NULLS FIRST";
        } else if (accept_keyword("LAST")) {
          term.text = "NULLS LAST";
        } else {
          syntax(peek(), "expected FIRST or LAST");
        }
      }
      order.children.push_back(std::move(term));
    } while (accept_symbol(","));
    return order;
  }

  Node parse_limit() {
    expect_keyword("LIMIT");
    Node limit(NodeKind::Limit);
    Node first = parse_expr();
    if (accept_keyword("OFFSET")) {
      limit.children.push_back(std::move(first));
      limit.children.push_back(parse_expr());
    } else if (accept_symbol(",")) {
      // LIMIT offset, count
      limit.children.push_back(parse_expr());
      limit.children.push_back(std::move(first));
    } else {
      limit.children.push_back(std::move(first));
    }
    return limit;
  }

  // ---- expressions, lowest to highest precedence ----

  Node parse_expr() { return parse_or(); }

  static Node binary(std::string op, Node left, Node right) {
    Node node(NodeKind::Binary, std::move(op));
    node.children.push_back(std::move(left));
    node.children.push_back(std::move(right));
    return node;
  }

  Node parse_or() {
    Node left = parse_and();
    while (accept_keyword("OR")) left = binary("OR", std::move(left), parse_and());
    return left;
  }

  Node parse_and() {
    Node left = parse_not();
    while (accept_keyword("AND")) left = binary("AND", std::move(left), parse_not());
    return left;
  }

  Node parse_not() {
    if (peek().is_keyword("NOT") && !peek(1).is_keyword("EXISTS")) {
      advance();
      Node node(NodeKind::Unary, "NOT");
      node.children.push_back(parse_not());
      return node;
    }
    return parse_equality();
  }

  Node parse_equality() {
    Node left = parse_comparison();
    for (;;) {
      const Token& t = peek();
      if (t.is_symbol("=") || t.is_symbol("==")) {
        advance();
        left = binary("=", std::move(left), parse_comparison());
      } else if (t.is_symbol("!=") || t.is_symbol("<>")) {
        advance();
        left = binary("<>", std::move(left), parse_comparison());
      } else if (t.is_keyword("IS")) {
        advance();
        const bool negated = accept_keyword("NOT");
        if (peek().is_keyword("DISTINCT")) unsupported(peek(), "IS DISTINCT FROM");
        left = binary(negated ? "IS NOT" : "IS", std::move(left), parse_comparison());
      } else if (t.is_keyword("ISNULL")) {
        advance();
        left = binary("IS", std::move(left), Node(NodeKind::Null, "NULL"));
      } else if (t.is_keyword("NOTNULL")) {
        advance();
        left = binary("IS NOT", std::move(left), Node(NodeKind::Null, "NULL"));
      } else if (t.is_keyword("NOT") && peek(1).is_keyword("NULL")) {
        advance();
        advance();
        left = binary("IS NOT", std::move(left), Node(NodeKind::Null, "NULL"));
      } else if (t.is_keyword("IN") || (t.is_keyword("NOT") && peek(1).is_keyword("IN"))) {
        const bool negated = accept_keyword("NOT");
        advance();
        left = parse_in(std::move(left), negated);
      } else if (is_like_word(t) || (t.is_keyword("NOT") && is_like_word(peek(1)))) {
        const bool negated = accept_keyword("NOT");
        std::string op = to_upper(advance().text);
        if (negated) op = "NOT " + op;
        Node node = binary(std::move(op), std::move(left), parse_comparison());
        if (accept_keyword("ESCAPE")) node.children.push_back(parse_comparison());
        left = std::move(node);
      } else if (t.is_keyword("BETWEEN") || (t.is_keyword("NOT") && peek(1).is_keyword("BETWEEN"))) {
        const bool negated = accept_keyword("NOT");
        advance();
        Node node(NodeKind::Between);
        node.flag = negated;
        node.children.push_back(std::move(left));
        node.children.push_back(parse_comparison());
        expect_keyword("AND");
        node.children.push_back(parse_comparison());
        left = std::move(node);
      } else {
        return left;
      }
    }
  }

  static bool is_like_word(const Token& t) {
    return t.is_keyword("LIKE") || t.is_keyword("GLOB") || t.is_keyword("MATCH") || t.is_keyword("REGEXP");
  }

  Node parse_in(Node subject, bool negated) {
    if (!peek().is_symbol("(")) unsupported(peek(), "IN with a table name");
    advance();
    if (at_query_start()) {
      Node node(NodeKind::InQuery);
      node.flag = negated;
      node.children.push_back(std::move(subject));
      node.children.push_back(parse_query());
      expect_symbol(")");
      return node;
    }
    Node node(NodeKind::InList);
    node.flag = negated;
    node.children.push_back(std::move(subject));
    if (!peek().is_symbol(")")) {
      do {
        node.children.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    expect_symbol(")");
    return node;
  }

  template <typename Next>
  Node parse_left_assoc(std::initializer_list<std::string_view> ops, Next next) {
    Node left = (this->*next)();
    for (;;) {
      const Token& t = peek();
      bool matched = false;
      for (auto op : ops) {
        if (t.is_symbol(op)) {
          matched = true;
          break;
        }
      }
      if (!matched) return left;
      std::string op = advance().text;
      left = binary(std::move(op), std::move(left), (this->*next)());
    }
  }

  Node parse_comparison() { return parse_left_assoc({"<", "<=", ">", ">="}, &Parser::parse_bitwise); }
  Node parse_bitwise() { return parse_left_assoc({"&", "|", "<<", ">>"}, &Parser::parse_additive); }
  Node parse_additive() { return parse_left_assoc({"+", "-"}, &Parser::parse_multiplicative); }
  Node parse_multiplicative() { return parse_left_assoc({"*", "/", "%"}, &Parser::parse_concat); }
  Node parse_concat() { return parse_left_assoc({"||", "->", "->>"}, &Parser::parse_unary); }

  Node parse_unary() {
    const Token& t = peek();
    if (t.is_symbol("-") || t.is_symbol("+") || t.is_symbol("~")) {
      Node node(NodeKind::Unary, advance().text);
      node.children.push_back(parse_unary());
      return node;
    }
    Node operand = parse_primary();
    while (accept_keyword("COLLATE")) {
      Node node(NodeKind::Collate, parse_name("collation name"));
      node.children.push_back(std::move(operand));
      operand = std::move(node);
    }
    return operand;
  }

  Node parse_subquery_body() {
    expect_symbol("(");
    Node query = parse_query();
    expect_symbol(")");
    return query;
  }

  Node parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case TokenType::Number:
        return Node(NodeKind::Number, advance().text);
      case TokenType::String:
        return Node(NodeKind::String, advance().text);
      case TokenType::Parameter:
        return Node(NodeKind::Parameter, advance().text);
      case TokenType::End:
        syntax(t, "unexpected end of input");
      case TokenType::Symbol:
        if (t.is_symbol("(")) {
          if (at_query_start(1)) {
            Node sub(NodeKind::Subquery);
            sub.children.push_back(parse_subquery_body());
            return sub;
          }
          advance();
          Node inner = parse_expr();
          if (peek().is_symbol(",")) unsupported(peek(), "row values");
          expect_symbol(")");
          return inner;
        }
        syntax(t, "unexpected '" + t.text + "'");
      case TokenType::QuotedName:
      case TokenType::Word:
        break;
    }

    if (t.type == TokenType::Word) {
      if (t.is_keyword("NULL")) {
        advance();
        return Node(NodeKind::Null, "NULL");
      }
      if (t.is_keyword("TRUE") || t.is_keyword("FALSE") || t.is_keyword("CURRENT_DATE") ||
          t.is_keyword("CURRENT_TIME") || t.is_keyword("CURRENT_TIMESTAMP")) {
        return Node(NodeKind::Keyword, to_upper(advance().text));
      }
      if (t.is_keyword("NOT") && peek(1).is_keyword("EXISTS")) {
        advance();
        advance();
        Node exists(NodeKind::Exists);
        exists.children.push_back(parse_subquery_body());
        Node node(NodeKind::Unary, "NOT");
        node.children.push_back(std::move(exists));
        return node;
      }
      if (t.is_keyword("EXISTS")) {
        advance();
        Node exists(NodeKind::Exists);
        exists.children.push_back(parse_subquery_body());
        return exists;
      }
      if (t.is_keyword("CASE")) return parse_case();
      if (t.is_keyword("CAST")) return parse_cast();
      if (t.is_keyword("RAISE")) unsupported(t, "RAISE");
      if (is_reserved_word(t.text)) syntax(t, "unexpected keyword " + to_upper(t.text));
    }

    if (t.type == TokenType::Word && peek(1).is_symbol("(")) return parse_function();

    std::string first = advance().text;
    if (accept_symbol(".")) {
      if (accept_symbol("*")) {
        Node star(NodeKind::Star);
        star.qualifier = std::move(first);
        return star;
      }
      Node column(NodeKind::Column, parse_member_name());
      column.qualifier = std::move(first);
      if (peek().is_symbol(".")) unsupported(peek(), "schema-qualified column references");
      return column;
    }
    return Node(NodeKind::Column, std::move(first));
  }

  Node parse_function() {
    Node fn(NodeKind::Function, advance().text);
    expect_symbol("(");
    if (accept_keyword("DISTINCT")) {
      fn.flag = true;
    } else {
      accept_keyword("ALL");
    }
    if (accept_symbol("*")) {
      fn.children.emplace_back(NodeKind::Star);
    } else if (!peek().is_symbol(")")) {
      do {
        fn.children.push_back(parse_expr());
      } while (accept_symbol(","));
    }
    if (peek().is_keyword("ORDER")) unsupported(peek(), "ordered aggregate arguments");
    expect_symbol(")");
    if (peek().is_keyword("FILTER")) unsupported(peek(), "aggregate FILTER clauses");
    if (peek().is_keyword("OVER")) unsupported(peek(), "window functions");
    return fn;
  }

  Node parse_case() {
    expect_keyword("CASE");
    Node node(NodeKind::Case);
    if (!peek().is_keyword("WHEN")) node.children.push_back(parse_expr());
    if (!peek().is_keyword("WHEN")) syntax(peek(), "expected WHEN");
    while (accept_keyword("WHEN")) {
      Node when(NodeKind::When);
      when.children.push_back(parse_expr());
      expect_keyword("THEN");
      when.children.push_back(parse_expr());
      node.children.push_back(std::move(when));
    }
    if (accept_keyword("ELSE")) {
      Node otherwise(NodeKind::Else);
      otherwise.children.push_back(parse_expr());
      node.children.push_back(std::move(otherwise));
    }
    expect_keyword("END");
    return node;
  }

  Node parse_cast() {
    expect_keyword("CAST");
    expect_symbol("(");
    Node operand = parse_expr();
    expect_keyword("AS");
    std::string type;
    while (peek().type == TokenType::Word && !peek().is_symbol(")")) {
      if (!type.empty()) type += ' ';
      type += to_upper(advance().text);
    }
    if (type.empty()) syntax(peek(), "expected type name");
    if (accept_symbol("(")) {
      type += '(';
      bool first = true;
      do {
        if (!first) type += ", ";
        first = false;
        bool negative = accept_symbol("-");
        if (peek().type != TokenType::Number) syntax(peek(), "expected type size");
        if (negative) type += '-';
        type += advance().text;
      } while (accept_symbol(","));
      expect_symbol(")");
      type += ')';
    }
    expect_symbol(")");
    Node node(NodeKind::Cast, std::move(type));
    node.children.push_back(std::move(operand));
    return node;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

Dialect parse_dialect(std::string_view id) {
  if (iequals(id, "sqlite")) return Dialect::Sqlite;
  throw std::invalid_argument("unsupported SQL dialect: " + std::string(id));
}

std::string_view to_string(ParseFailureReason reason) {
  switch (reason) {
    case ParseFailureReason::Syntax:
      return "syntax";
    case ParseFailureReason::Unsupported:
      return "unsupported";
    case ParseFailureReason::EmptyInput:
      return "empty";
  }
  return "unknown";
}

ParseResult parse_sql(std::string_view text, Dialect /*dialect*/) {
  std::optional<LexError> lex_error;
  auto tokens = tokenize(text, &lex_error);
  if (lex_error) return ParseFailure{ParseFailureReason::Syntax, lex_error->offset, lex_error->message};

  bool only_semicolons = true;
  for (const auto& t : tokens) {
    if (t.type != TokenType::End && !t.is_symbol(";")) only_semicolons = false;
  }
  if (only_semicolons) return ParseFailure{ParseFailureReason::EmptyInput, std::nullopt, "empty input"};

  try {
    Parser parser(std::move(tokens));
    return parser.parse_statement();
  } catch (const Failure& f) {
    return ParseFailure{f.reason, f.offset, f.message};
  }
}

}  // namespace sqlstruct

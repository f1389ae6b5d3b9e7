#include "sqlstruct/canonical.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <utility>
#include <vector>

#include "sqlstruct/lexer.hpp"
#include "sqlstruct/render.hpp"

namespace sqlstruct {

std::string key_digest(std::string_view key) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

StructureKey make_structure_key(std::string key) {
  auto digest = key_digest(key);
  return StructureKey{std::move(key), std::move(digest)};
}

// ---------------------------------------------------------------------------
// Text normalization

namespace {

std::string collapse_whitespace(std::string_view sql) {
  std::string out;
  out.reserve(sql.size());
  bool pending_space = false;
  for (char c : sql) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool ends_select_list(const Token& t) {
  static constexpr std::string_view kWords[] = {"FROM",   "WHERE",     "GROUP",  "HAVING", "ORDER",
                                                "LIMIT",  "UNION",     "EXCEPT", "INTERSECT", "WINDOW"};
  for (auto w : kWords) {
    if (t.is_keyword(w)) return true;
  }
  return false;
}

bool is_name_token(const Token& t) {
  return t.type == TokenType::QuotedName || (t.type == TokenType::Word && !is_reserved_word(t.text));
}

// Byte ranges [begin, end) covering " AS name" after bare-column select items.
std::vector<std::pair<std::size_t, std::size_t>> simple_alias_spans(std::string_view sql) {
  std::optional<LexError> error;
  const auto tokens = tokenize(sql, &error);
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  if (error) return spans;

  struct Context {
    bool in_select_list = false;
    bool item_start = false;
  };
  std::vector<Context> stack(1);
  auto at = [&](std::size_t k) -> const Token& { return tokens[std::min(k, tokens.size() - 1)]; };

  for (std::size_t i = 0; i < tokens.size() && tokens[i].type != TokenType::End; ++i) {
    const Token& t = tokens[i];
    Context& ctx = stack.back();
    if (t.is_symbol("(")) {
      ctx.item_start = false;
      stack.emplace_back();
      continue;
    }
    if (t.is_symbol(")")) {
      if (stack.size() > 1) stack.pop_back();
      continue;
    }
    if (t.is_keyword("SELECT")) {
      ctx.in_select_list = true;
      ctx.item_start = true;
      continue;
    }
    if (!ctx.in_select_list) continue;
    if (ends_select_list(t)) {
      ctx.in_select_list = false;
      ctx.item_start = false;
      continue;
    }
    if (t.is_symbol(",")) {
      ctx.item_start = true;
      continue;
    }
    if (!ctx.item_start) continue;
    if (t.is_keyword("DISTINCT") || t.is_keyword("ALL")) continue;
    ctx.item_start = false;

    // column [ . column ] AS alias <end of item>
    std::size_t j = i;
    if (!is_name_token(tokens[j])) continue;
    if (at(j + 1).is_symbol(".") && (at(j + 2).type == TokenType::Word || at(j + 2).type == TokenType::QuotedName)) {
      j += 2;
    }
    if (!at(j + 1).is_keyword("AS")) continue;
    const Token& alias = at(j + 2);
    if (!(is_name_token(alias) || alias.type == TokenType::String)) continue;
    const Token& after = at(j + 3);
    const bool item_ends = after.type == TokenType::End || after.is_symbol(",") || after.is_symbol(")") ||
                           after.is_symbol(";") || ends_select_list(after);
    if (!item_ends) continue;
    const std::size_t column_end = tokens[j].offset + tokens[j].length;
    spans.emplace_back(column_end, alias.offset + alias.length);
    i = j + 2;
  }
  return spans;
}

}  // namespace

std::string normalize_text(std::string_view sql) {
  std::string_view body = trim(sql);
  while (!body.empty() && body.back() == ';') body = trim(body.substr(0, body.size() - 1));

  std::string text = collapse_whitespace(body);

  const auto spans = simple_alias_spans(text);
  if (!spans.empty()) {
    std::string stripped;
    stripped.reserve(text.size());
    std::size_t pos = 0;
    for (const auto& [begin, end] : spans) {
      stripped.append(text, pos, begin - pos);
      pos = end;
    }
    stripped.append(text, pos, std::string::npos);
    text = std::move(stripped);
  }
  return to_lower(text);
}

// ---------------------------------------------------------------------------
// AST canonicalization

namespace {

struct Scope {
  std::vector<std::pair<std::string, std::string>> renames;  // lowercased original -> canonical
  const Scope* parent = nullptr;

  [[nodiscard]] const std::string* lookup(const std::string& qualifier) const {
    const auto needle = to_lower(qualifier);
    for (const Scope* s = this; s != nullptr; s = s->parent) {
      for (const auto& [original, renamed] : s->renames) {
        if (original == needle) return &renamed;
      }
    }
    return nullptr;
  }
};

void canon_query(Node& query, const Scope* parent);

void rewrite_expr(Node& node, const Scope& scope) {
  if ((node.kind == NodeKind::Column || node.kind == NodeKind::Star) && !node.qualifier.empty()) {
    if (const auto* renamed = scope.lookup(node.qualifier)) node.qualifier = *renamed;
  }
  for (auto& child : node.children) {
    if (child.kind == NodeKind::Query) {
      canon_query(child, &scope);
    } else {
      rewrite_expr(child, scope);
    }
  }
}

void canon_select(Node& select, const Scope* parent) {
  Scope scope;
  scope.parent = parent;

  if (Node* from = select.find(NodeKind::From)) {
    int counter = 0;
    auto assign = [&](Node& source) {
      if (source.alias.empty()) return;
      auto original = to_lower(source.alias);
      const bool seen = std::any_of(scope.renames.begin(), scope.renames.end(),
                                    [&](const auto& entry) { return entry.first == original; });
      if (!seen) scope.renames.emplace_back(std::move(original), "t" + std::to_string(++counter));
    };
    for (auto& item : from->children) assign(item.kind == NodeKind::Join ? item.children.at(0) : item);
    for (auto& item : from->children) {
      Node& source = item.kind == NodeKind::Join ? item.children.at(0) : item;
      if (!source.alias.empty()) {
        if (const auto* renamed = scope.lookup(source.alias)) source.alias = *renamed;
      }
    }
  }

  for (auto& child : select.children) rewrite_expr(child, scope);
}

void canon_body(Node& body, const Scope* parent) {
  if (body.kind == NodeKind::Select) {
    canon_select(body, parent);
    return;
  }
  // Compound: each branch independently, trailing ORDER BY / LIMIT in the enclosing scope.
  Scope outer;
  outer.parent = parent;
  for (std::size_t i = 0; i < body.children.size(); ++i) {
    Node& child = body.children[i];
    if (i < 2) {
      canon_body(child, parent);
    } else {
      rewrite_expr(child, outer);
    }
  }
}

void canon_query(Node& query, const Scope* parent) {
  for (auto& child : query.children) {
    if (child.kind == NodeKind::With) {
      for (auto& cte : child.children) canon_query(cte.children.at(0), parent);
    } else {
      canon_body(child, parent);
    }
  }
}

bool is_and(const Node& n) { return n.kind == NodeKind::Binary && n.text == "AND" && n.children.size() == 2; }

void collect_conjuncts(Node&& node, std::vector<Node>& out) {
  if (is_and(node)) {
    collect_conjuncts(std::move(node.children[0]), out);
    collect_conjuncts(std::move(node.children[1]), out);
  } else {
    out.push_back(std::move(node));
  }
}

void sort_conjuncts(Node& node) {
  for (auto& child : node.children) sort_conjuncts(child);
  if (!is_and(node)) return;

  std::vector<Node> conjuncts;
  collect_conjuncts(std::move(node), conjuncts);

  std::vector<std::pair<std::string, std::size_t>> order;
  order.reserve(conjuncts.size());
  for (std::size_t i = 0; i < conjuncts.size(); ++i) order.emplace_back(normalize_text(render(conjuncts[i])), i);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  Node chain = std::move(conjuncts[order[0].second]);
  for (std::size_t i = 1; i < order.size(); ++i) {
    Node next(NodeKind::Binary, "AND");
    next.children.push_back(std::move(chain));
    next.children.push_back(std::move(conjuncts[order[i].second]));
    chain = std::move(next);
  }
  node = std::move(chain);
}

}  // namespace

SqlAst canonicalize_ast(SqlAst ast) {
  canon_query(ast.root, nullptr);
  sort_conjuncts(ast.root);
  return ast;
}

KeyResult canonical_key(std::string_view text, Dialect dialect) {
  auto parsed_result = parse_sql(text, dialect);
  if (auto* failure = std::get_if<ParseFailure>(&parsed_result)) return *failure;
  auto canonical = canonicalize_ast(std::get<SqlAst>(std::move(parsed_result)));
  return make_structure_key(normalize_text(render(canonical)));
}

}  // namespace sqlstruct

#include "sqlstruct/ir.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>

#include "sqlstruct/error.hpp"
#include "sqlstruct/execution.hpp"
#include "sqlstruct/lexer.hpp"
#include "sqlstruct/parser.hpp"
#include "sqlstruct/render.hpp"

namespace sqlstruct {

namespace {

bool same_query(const std::shared_ptr<const QueryIR>& a, const std::shared_ptr<const QueryIR>& b) {
  if (!a || !b) return !a && !b;
  return *a == *b;
}

}  // namespace

bool IrExpr::operator==(const IrExpr& other) const {
  return kind == other.kind && table == other.table && name == other.name && value == other.value &&
         distinct == other.distinct && args == other.args && same_query(query, other.query);
}

bool IrSource::operator==(const IrSource& other) const {
  return table == other.table && alias == other.alias && same_query(subquery, other.subquery);
}

std::string_view to_string(IrErrorKind kind) {
  switch (kind) {
    case IrErrorKind::Json:
      return "json";
    case IrErrorKind::Schema:
      return "schema";
    case IrErrorKind::Compile:
      return "compile";
  }
  return "unknown";
}

std::string strip_code_fences(std::string_view raw, bool* stripped) {
  if (stripped != nullptr) *stripped = false;
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  std::string_view s = trim(raw);
  if (s.substr(0, 3) != "```") return std::string(s);
  const auto first_newline = s.find('\n');
  const auto close = s.rfind("```");
  if (first_newline == std::string_view::npos || close <= first_newline) return std::string(s);
  if (stripped != nullptr) *stripped = true;
  return std::string(trim(s.substr(first_newline + 1, close - first_newline - 1)));
}

namespace {

constexpr std::string_view kFunctions[] = {
    "ABS",     "AVG",      "CHAR",     "COALESCE", "COUNT",   "DATE",    "DATETIME",  "GROUP_CONCAT",
    "HEX",     "IFNULL",   "IIF",      "INSTR",    "JULIANDAY", "LENGTH", "LOWER",    "LTRIM",
    "MAX",     "MIN",      "NULLIF",   "PRINTF",   "QUOTE",   "RANDOM",  "REPLACE",   "ROUND",
    "RTRIM",   "SIGN",     "STRFTIME", "SUBSTR",   "SUBSTRING", "SUM",   "TIME",      "TOTAL",
    "TRIM",    "TYPEOF",   "UNICODE",  "UPPER",
};

constexpr std::array<std::string_view, 25> kOperators = {
    "=",  "!=", "<>", "<",      ">",      "<=",         ">=",  "LIKE", "NOT LIKE", "GLOB", "NOT GLOB", "IN",
    "NOT IN", "IS", "IS NOT", "BETWEEN", "NOT BETWEEN", "+",  "-",   "*",        "/",    "%",        "||", "AND", "OR",
};

struct Violation {
  std::string path;
  std::string message;
};

[[noreturn]] void fail(const std::string& path, std::string message) { throw Violation{path, std::move(message)}; }

std::string at(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string at(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

const std::string& require_string(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  if (j.get_ref<const std::string&>().empty()) fail(path, "expected a non-empty string");
  return j.get_ref<const std::string&>();
}

const nlohmann::json& require_array(const nlohmann::json& obj, std::string_view key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(at(path, key), "missing required field");
  if (!it->is_array()) fail(at(path, key), "expected an array");
  return *it;
}

std::optional<std::string> optional_alias(const nlohmann::json& obj, const std::string& path) {
  const auto it = obj.find("alias");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return require_string(*it, at(path, "alias"));
}

QueryIR read_query(const nlohmann::json& q, const std::string& path);

IrExpr read_expr(const nlohmann::json& j, const std::string& path) {
  IrExpr e;
  if (j.is_null() || j.is_string() || j.is_number() || j.is_boolean()) {
    e.kind = IrExprKind::Literal;
    e.value = j;
    return e;
  }
  if (!j.is_object()) fail(path, "expected an expression object");

  if (const auto it = j.find("col"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) fail(at(path, "col"), "expected [table, column]");
    e.kind = IrExprKind::Column;
    e.table = require_string((*it)[0], at(at(path, "col"), 0));
    e.name = require_string((*it)[1], at(at(path, "col"), 1));
    return e;
  }
  if (const auto it = j.find("star"); it != j.end()) {
    e.kind = IrExprKind::Star;
    if (it->is_string()) {
      e.table = require_string(*it, at(path, "star"));
    } else if (!it->is_boolean() || !it->get<bool>()) {
      fail(at(path, "star"), "expected true or a table name");
    }
    return e;
  }
  if (const auto it = j.find("value"); it != j.end()) {
    if (!(it->is_null() || it->is_string() || it->is_number() || it->is_boolean())) {
      fail(at(path, "value"), "expected a scalar literal");
    }
    e.kind = IrExprKind::Literal;
    e.value = *it;
    return e;
  }
  if (const auto it = j.find("func"); it != j.end()) {
    e.kind = IrExprKind::Function;
    e.name = to_upper(require_string(*it, at(path, "func")));
    if (!is_known_function(e.name)) fail(at(path, "func"), "unknown function " + e.name);
    const auto args = j.find("args");
    if (args != j.end()) {
      if (!args->is_array()) fail(at(path, "args"), "expected an array");
      for (std::size_t i = 0; i < args->size(); ++i) e.args.push_back(read_expr((*args)[i], at(at(path, "args"), i)));
    }
    if (const auto d = j.find("distinct"); d != j.end() && !d->is_null()) {
      if (!d->is_boolean()) fail(at(path, "distinct"), "expected a boolean");
      e.distinct = d->get<bool>();
    }
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      if (e.args[i].kind == IrExprKind::Star && (e.name != "COUNT" || e.args.size() != 1)) {
        fail(at(at(path, "args"), i), "* is only allowed as the sole COUNT argument");
      }
    }
    return e;
  }
  if (const auto it = j.find("op"); it != j.end()) {
    e.kind = IrExprKind::Binary;
    e.name = to_upper(collapse_spaces(require_string(*it, at(path, "op"))));
    if (e.name == "!=") e.name = "<>";
    if (e.name == "==") e.name = "=";
    if (std::find(kOperators.begin(), kOperators.end(), e.name) == kOperators.end()) {
      fail(at(path, "op"), "unknown operator " + e.name);
    }
    if (!j.contains("left")) fail(at(path, "left"), "missing required field");
    if (!j.contains("right")) fail(at(path, "right"), "missing required field");
    e.args.push_back(read_expr(j["left"], at(path, "left")));
    e.args.push_back(read_expr(j["right"], at(path, "right")));
    const IrExpr& right = e.args[1];
    if (e.name == "IN" || e.name == "NOT IN") {
      if (right.kind != IrExprKind::List && right.kind != IrExprKind::Subquery) {
        fail(at(path, "right"), "IN needs a list or a subquery");
      }
    } else if (e.name == "BETWEEN" || e.name == "NOT BETWEEN") {
      if (right.kind != IrExprKind::List || right.args.size() != 2) {
        fail(at(path, "right"), "BETWEEN needs a list of two bounds");
      }
    } else {
      for (std::size_t i = 0; i < 2; ++i) {
        if (e.args[i].kind == IrExprKind::List) fail(at(path, i == 0 ? "left" : "right"), "list not allowed here");
      }
    }
    for (const auto& arg : e.args) {
      if (arg.kind == IrExprKind::Star) fail(path, "* is not an operand");
    }
    return e;
  }
  if (const auto it = j.find("not"); it != j.end()) {
    e.kind = IrExprKind::Not;
    e.args.push_back(read_expr(*it, at(path, "not")));
    return e;
  }
  for (const auto* key : {"list", "or"}) {
    if (const auto it = j.find(key); it != j.end()) {
      e.kind = std::string_view(key) == "list" ? IrExprKind::List : IrExprKind::Or;
      if (!it->is_array() || it->empty()) fail(at(path, key), "expected a non-empty array");
      for (std::size_t i = 0; i < it->size(); ++i) e.args.push_back(read_expr((*it)[i], at(at(path, key), i)));
      return e;
    }
  }
  if (const auto it = j.find("type"); it != j.end()) {
    if (*it != "query") fail(at(path, "type"), "expected \"query\"");
    if (!j.contains("query")) fail(at(path, "query"), "missing required field");
    e.kind = IrExprKind::Subquery;
    e.query = std::make_shared<const QueryIR>(read_query(j["query"], at(path, "query")));
    return e;
  }
  fail(path, "unrecognized expression");
}

std::vector<IrExpr> read_conditions(const nlohmann::json& q, std::string_view key, const std::string& path) {
  std::vector<IrExpr> out;
  const auto it = q.find(key);
  if (it == q.end() || it->is_null()) return out;
  if (!it->is_array()) fail(at(path, key), "expected an array");
  for (std::size_t i = 0; i < it->size(); ++i) out.push_back(read_expr((*it)[i], at(at(path, key), i)));
  return out;
}

IrSource read_source(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  IrSource s;
  s.alias = optional_alias(j, path);
  if (const auto sub = j.find("subquery"); sub != j.end()) {
    const nlohmann::json& inner = sub->is_object() && sub->contains("query") ? (*sub)["query"] : *sub;
    s.subquery = std::make_shared<const QueryIR>(read_query(inner, at(path, "subquery")));
    if (!s.alias) fail(at(path, "alias"), "a derived table needs an alias");
    return s;
  }
  if (!j.contains("table")) fail(at(path, "table"), "missing required field");
  s.table = require_string(j["table"], at(path, "table"));
  return s;
}

QueryIR read_query(const nlohmann::json& q, const std::string& path) {
  if (!q.is_object()) fail(path, "expected an object");
  QueryIR ir;

  const auto& select = require_array(q, "select", path);
  if (select.empty()) fail(at(path, "select"), "select must not be empty");
  for (std::size_t i = 0; i < select.size(); ++i) {
    const std::string p = at(at(path, "select"), i);
    const auto& item = select[i];
    IrSelectItem s;
    if (item.is_object() && item.contains("expr")) {
      s.expr = read_expr(item["expr"], at(p, "expr"));
      s.alias = optional_alias(item, p);
    } else {
      s.expr = read_expr(item, p);
    }
    ir.select.push_back(std::move(s));
  }

  if (!q.contains("from")) fail(at(path, "from"), "missing required field");
  ir.from = read_source(q["from"], at(path, "from"));

  if (const auto joins = q.find("joins"); joins != q.end() && !joins->is_null()) {
    if (!joins->is_array()) fail(at(path, "joins"), "expected an array");
    for (std::size_t i = 0; i < joins->size(); ++i) {
      const std::string p = at(at(path, "joins"), i);
      const auto& jn = (*joins)[i];
      IrJoin join;
      join.source = read_source(jn, p);
      if (const auto type = jn.find("type"); type != jn.end() && !type->is_null()) {
        std::string t = to_upper(collapse_spaces(require_string(*type, at(p, "type"))));
        if (t.size() > 5 && t.substr(t.size() - 5) == " JOIN") t.resize(t.size() - 5);
        if (t == "JOIN" || t == "INNER") {
          join.type = "INNER";
        } else if (t == "LEFT" || t == "LEFT OUTER") {
          join.type = "LEFT";
        } else if (t == "CROSS") {
          join.type = "CROSS";
        } else {
          fail(at(p, "type"), "unsupported join type " + t);
        }
      }
      if (const auto on = jn.find("on"); on != jn.end() && !on->is_null()) {
        if (on->is_array()) {
          for (std::size_t k = 0; k < on->size(); ++k) join.on.push_back(read_expr((*on)[k], at(at(p, "on"), k)));
        } else {
          join.on.push_back(read_expr(*on, at(p, "on")));
        }
      }
      if (join.type == "CROSS" && !join.on.empty()) fail(at(p, "on"), "a cross join takes no condition");
      ir.joins.push_back(std::move(join));
    }
  }

  ir.where = read_conditions(q, "where", path);
  ir.group_by = read_conditions(q, "group_by", path);
  ir.having = read_conditions(q, "having", path);

  if (const auto order = q.find("order_by"); order != q.end() && !order->is_null()) {
    if (!order->is_array()) fail(at(path, "order_by"), "expected an array");
    for (std::size_t i = 0; i < order->size(); ++i) {
      const std::string p = at(at(path, "order_by"), i);
      const auto& item = (*order)[i];
      if (!item.is_object() || !item.contains("expr")) fail(at(p, "expr"), "missing required field");
      IrOrder o;
      o.expr = read_expr(item["expr"], at(p, "expr"));
      if (const auto dir = item.find("direction"); dir != item.end() && !dir->is_null()) {
        const std::string d = to_lower(require_string(*dir, at(p, "direction")));
        if (d != "asc" && d != "desc") fail(at(p, "direction"), "expected \"asc\" or \"desc\"");
        o.desc = d == "desc";
      }
      ir.order_by.push_back(std::move(o));
    }
  }

  if (const auto limit = q.find("limit"); limit != q.end() && !limit->is_null()) {
    if (!limit->is_number_integer() || limit->get<std::int64_t>() < 0) {
      fail(at(path, "limit"), "expected a non-negative integer");
    }
    ir.limit = limit->get<std::int64_t>();
  }
  if (const auto d = q.find("distinct"); d != q.end() && !d->is_null()) {
    if (!d->is_boolean()) fail(at(path, "distinct"), "expected a boolean");
    ir.distinct = d->get<bool>();
  }
  return ir;
}

}  // namespace

bool is_known_function(std::string_view name) {
  const std::string upper = to_upper(name);
  return std::find(std::begin(kFunctions), std::end(kFunctions), upper) != std::end(kFunctions);
}

IrResult validate_ir_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) fail("", "expected a JSON object");
    const auto type = doc.find("type");
    if (type == doc.end()) fail("/type", "missing required field");
    if (*type != "query") fail("/type", "expected \"query\"");
    std::optional<std::string> version;
    if (const auto v = doc.find("version"); v != doc.end() && !v->is_null()) {
      version = v->is_string() ? v->get<std::string>() : v->dump();
    }
    if (!doc.contains("query")) fail("/query", "missing required field");
    QueryIR ir = read_query(doc["query"], "/query");
    ir.version = std::move(version);
    return ir;
  } catch (const Violation& v) {
    return IrError{IrErrorKind::Schema, v.path, v.message};
  }
}

IrResult validate_ir(std::string_view raw) {
  const std::string body = strip_code_fences(raw);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return IrError{IrErrorKind::Json, "", e.what()};
  }
  return validate_ir_json(doc);
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

nlohmann::ordered_json query_body_to_json(const QueryIR& ir);

nlohmann::ordered_json expr_to_json(const IrExpr& e) {
  nlohmann::ordered_json j;
  switch (e.kind) {
    case IrExprKind::Column:
      j["col"] = {e.table, e.name};
      break;
    case IrExprKind::Star:
      if (e.table.empty()) {
        j["star"] = true;
      } else {
        j["star"] = e.table;
      }
      break;
    case IrExprKind::Literal:
      j["value"] = e.value;
      break;
    case IrExprKind::Function: {
      j["func"] = e.name;
      auto args = nlohmann::ordered_json::array();
      for (const auto& a : e.args) args.push_back(expr_to_json(a));
      j["args"] = std::move(args);
      j["distinct"] = e.distinct;
      break;
    }
    case IrExprKind::Binary:
      j["op"] = e.name;
      j["left"] = expr_to_json(e.args.at(0));
      j["right"] = expr_to_json(e.args.at(1));
      break;
    case IrExprKind::Not:
      j["not"] = expr_to_json(e.args.at(0));
      break;
    case IrExprKind::List:
    case IrExprKind::Or: {
      auto items = nlohmann::ordered_json::array();
      for (const auto& a : e.args) items.push_back(expr_to_json(a));
      j[e.kind == IrExprKind::List ? "list" : "or"] = std::move(items);
      break;
    }
    case IrExprKind::Subquery:
      j["type"] = "query";
      j["query"] = query_body_to_json(*e.query);
      break;
  }
  return j;
}

nlohmann::ordered_json source_to_json(const IrSource& s) {
  nlohmann::ordered_json j;
  if (s.subquery) {
    j["subquery"] = query_body_to_json(*s.subquery);
  } else {
    j["table"] = s.table;
  }
  j["alias"] = s.alias ? nlohmann::ordered_json(*s.alias) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json exprs_to_json(const std::vector<IrExpr>& items) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& e : items) out.push_back(expr_to_json(e));
  return out;
}

nlohmann::ordered_json query_body_to_json(const QueryIR& ir) {
  nlohmann::ordered_json q;
  auto select = nlohmann::ordered_json::array();
  for (const auto& s : ir.select) {
    nlohmann::ordered_json item;
    item["expr"] = expr_to_json(s.expr);
    item["alias"] = s.alias ? nlohmann::ordered_json(*s.alias) : nlohmann::ordered_json(nullptr);
    select.push_back(std::move(item));
  }
  q["select"] = std::move(select);
  q["from"] = source_to_json(ir.from);
  auto joins = nlohmann::ordered_json::array();
  for (const auto& jn : ir.joins) {
    auto item = source_to_json(jn.source);
    item["on"] = exprs_to_json(jn.on);
    item["type"] = to_lower(jn.type);
    joins.push_back(std::move(item));
  }
  q["joins"] = std::move(joins);
  q["where"] = exprs_to_json(ir.where);
  q["group_by"] = exprs_to_json(ir.group_by);
  q["having"] = exprs_to_json(ir.having);
  auto order = nlohmann::ordered_json::array();
  for (const auto& o : ir.order_by) {
    nlohmann::ordered_json item;
    item["expr"] = expr_to_json(o.expr);
    item["direction"] = o.desc ? "desc" : "asc";
    order.push_back(std::move(item));
  }
  q["order_by"] = std::move(order);
  q["limit"] = ir.limit ? nlohmann::ordered_json(*ir.limit) : nlohmann::ordered_json(nullptr);
  q["distinct"] = ir.distinct;
  return q;
}

}  // namespace

nlohmann::ordered_json ir_to_json(const QueryIR& ir) {
  nlohmann::ordered_json j;
  if (ir.version) j["version"] = *ir.version;
  j["type"] = "query";
  j["query"] = query_body_to_json(ir);
  return j;
}

// ---------------------------------------------------------------------------
// Lowering

namespace {

Node lower_query(const QueryIR& ir);

Node number_node(std::string text) { return Node(NodeKind::Number, std::move(text)); }

Node lower_literal(const nlohmann::json& v) {
  if (v.is_null()) return Node(NodeKind::Null);
  if (v.is_boolean()) return number_node(v.get<bool>() ? "1" : "0");
  if (v.is_string()) return Node(NodeKind::String, v.get<std::string>());
  if (v.is_number_integer() || v.is_number_unsigned()) {
    std::string text = v.dump();
    if (!text.empty() && text.front() == '-') {
      Node neg(NodeKind::Unary, "-");
      neg.children.push_back(number_node(text.substr(1)));
      return neg;
    }
    return number_node(std::move(text));
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw IrCompileError("non-finite literal");
    std::string text = nlohmann::json(std::fabs(d)).dump();
    if (text.find_first_of(".eE") == std::string::npos) text += ".0";
    if (std::signbit(d)) {
      Node neg(NodeKind::Unary, "-");
      neg.children.push_back(number_node(std::move(text)));
      return neg;
    }
    return number_node(std::move(text));
  }
  throw IrCompileError("literal is not a scalar");
}

Node wrap_query(Node select) {
  Node q(NodeKind::Query);
  q.children.push_back(std::move(select));
  return q;
}

Node lower_expr(const IrExpr& e) {
  switch (e.kind) {
    case IrExprKind::Column: {
      Node n(NodeKind::Column, e.name);
      n.qualifier = e.table;
      return n;
    }
    case IrExprKind::Star: {
      Node n(NodeKind::Star);
      n.qualifier = e.table;
      return n;
    }
    case IrExprKind::Literal:
      return lower_literal(e.value);
    case IrExprKind::Function: {
      Node n(NodeKind::Function, e.name);
      n.flag = e.distinct;
      for (const auto& a : e.args) n.children.push_back(lower_expr(a));
      return n;
    }
    case IrExprKind::Binary: {
      if (e.args.size() != 2) throw IrCompileError("binary expression needs two operands");
      const IrExpr& right = e.args[1];
      const bool negated = e.name.rfind("NOT ", 0) == 0;
      if (e.name == "IN" || e.name == "NOT IN") {
        if (right.kind == IrExprKind::Subquery) {
          Node n(NodeKind::InQuery);
          n.flag = negated;
          n.children.push_back(lower_expr(e.args[0]));
          n.children.push_back(lower_query(*right.query));
          return n;
        }
        if (right.kind != IrExprKind::List) throw IrCompileError("IN without a list");
        Node n(NodeKind::InList);
        n.flag = negated;
        n.children.push_back(lower_expr(e.args[0]));
        for (const auto& item : right.args) n.children.push_back(lower_expr(item));
        return n;
      }
      if (e.name == "BETWEEN" || e.name == "NOT BETWEEN") {
        if (right.kind != IrExprKind::List || right.args.size() != 2) throw IrCompileError("BETWEEN bounds");
        Node n(NodeKind::Between);
        n.flag = negated;
        n.children.push_back(lower_expr(e.args[0]));
        n.children.push_back(lower_expr(right.args[0]));
        n.children.push_back(lower_expr(right.args[1]));
        return n;
      }
      if (right.kind == IrExprKind::List) throw IrCompileError("list operand outside IN/BETWEEN");
      Node n(NodeKind::Binary, e.name);
      n.children.push_back(lower_expr(e.args[0]));
      n.children.push_back(lower_expr(right));
      return n;
    }
    case IrExprKind::Not: {
      Node n(NodeKind::Unary, "NOT");
      n.children.push_back(lower_expr(e.args.at(0)));
      return n;
    }
    case IrExprKind::Or: {
      if (e.args.empty()) throw IrCompileError("empty OR");
      Node acc = lower_expr(e.args[0]);
      for (std::size_t i = 1; i < e.args.size(); ++i) {
        Node n(NodeKind::Binary, "OR");
        n.children.push_back(std::move(acc));
        n.children.push_back(lower_expr(e.args[i]));
        acc = std::move(n);
      }
      return acc;
    }
    case IrExprKind::List:
      throw IrCompileError("list used as a value");
    case IrExprKind::Subquery: {
      if (!e.query) throw IrCompileError("subquery without a body");
      Node n(NodeKind::Subquery);
      n.children.push_back(lower_query(*e.query));
      return n;
    }
  }
  throw IrCompileError("unknown expression kind");
}

Node conjunction(const std::vector<IrExpr>& items) {
  Node acc = lower_expr(items.at(0));
  for (std::size_t i = 1; i < items.size(); ++i) {
    Node n(NodeKind::Binary, "AND");
    n.children.push_back(std::move(acc));
    n.children.push_back(lower_expr(items[i]));
    acc = std::move(n);
  }
  return acc;
}

Node lower_source(const IrSource& s) {
  if (s.subquery) {
    Node n(NodeKind::DerivedTable);
    n.children.push_back(lower_query(*s.subquery));
    n.alias = s.alias.value_or("");
    return n;
  }
  if (s.table.empty()) throw IrCompileError("source without a table");
  Node n(NodeKind::Table, s.table);
  n.alias = s.alias.value_or("");
  return n;
}

Node lower_query(const QueryIR& ir) {
  if (ir.select.empty()) throw IrCompileError("empty select list");
  Node select(NodeKind::Select);
  select.flag = ir.distinct;
  for (const auto& item : ir.select) {
    Node rc(NodeKind::ResultColumn);
    rc.children.push_back(lower_expr(item.expr));
    rc.alias = item.alias.value_or("");
    select.children.push_back(std::move(rc));
  }
  Node from(NodeKind::From);
  from.children.push_back(lower_source(ir.from));
  for (const auto& jn : ir.joins) {
    Node join(NodeKind::Join, jn.type == "INNER" ? "JOIN" : jn.type + " JOIN");
    join.children.push_back(lower_source(jn.source));
    if (!jn.on.empty()) {
      Node on(NodeKind::On);
      on.children.push_back(conjunction(jn.on));
      join.children.push_back(std::move(on));
    }
    from.children.push_back(std::move(join));
  }
  select.children.push_back(std::move(from));
  if (!ir.where.empty()) {
    Node where(NodeKind::Where);
    where.children.push_back(conjunction(ir.where));
    select.children.push_back(std::move(where));
  }
  if (!ir.group_by.empty()) {
    Node group(NodeKind::GroupBy);
    for (const auto& g : ir.group_by) group.children.push_back(lower_expr(g));
    select.children.push_back(std::move(group));
  }
  if (!ir.having.empty()) {
    Node having(NodeKind::Having);
    having.children.push_back(conjunction(ir.having));
    select.children.push_back(std::move(having));
  }
  if (!ir.order_by.empty()) {
    Node order(NodeKind::OrderBy);
    for (const auto& o : ir.order_by) {
      Node ordering(NodeKind::Ordering);
      ordering.flag = o.desc;
      ordering.children.push_back(lower_expr(o.expr));
      order.children.push_back(std::move(ordering));
    }
    select.children.push_back(std::move(order));
  }
  if (ir.limit) {
    if (*ir.limit < 0) throw IrCompileError("negative limit");
    Node limit(NodeKind::Limit);
    limit.children.push_back(number_node(std::to_string(*ir.limit)));
    select.children.push_back(std::move(limit));
  }
  return wrap_query(std::move(select));
}

}  // namespace

SqlAst ir_to_ast(const QueryIR& ir) { return SqlAst{lower_query(ir)}; }

std::string compile_ir(const QueryIR& ir) { return render(ir_to_ast(ir)); }

// ---------------------------------------------------------------------------
// Pipeline

PipelineRecord evaluate_pipeline_output(std::string question_id, std::string raw, const Database* db) {
  PipelineRecord r;
  r.question_id = std::move(question_id);
  const std::string body = strip_code_fences(raw, &r.fence_stripped);
  r.raw_text = std::move(raw);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    r.error = std::string("json: ") + e.what();
    return r;
  }
  r.json_valid = true;

  auto validated = validate_ir_json(doc);
  if (const auto* err = std::get_if<IrError>(&validated)) {
    r.error = "schema: " + err->path + ": " + err->message;
    return r;
  }
  try {
    r.sql = compile_ir(std::get<QueryIR>(validated));
  } catch (const IrCompileError& e) {
    r.error = std::string("compile: ") + e.what();
    return r;
  }
  r.compilable = true;

  const auto parsed_sql = parse_sql(r.sql);
  r.sql_parses = parsed(parsed_sql);
  if (!r.sql_parses) r.error = "parse: " + std::get<ParseFailure>(parsed_sql).message;

  if (db != nullptr) {
    const auto outcome = db->execute(r.sql);
    r.end_to_end = outcome.ok();
    if (!r.end_to_end && r.error.empty()) r.error = "exec: " + outcome.message;
  } else {
    r.end_to_end = r.sql_parses;
  }
  return r;
}

bool flags_consistent(const PipelineRecord& r) {
  if (r.end_to_end && !r.compilable) return false;
  if (r.sql_parses && !r.compilable) return false;
  if (r.compilable && !r.json_valid) return false;
  return true;
}

PipelineRates pipeline_metrics(std::span<const PipelineRecord> records) {
  if (records.empty()) throw Error(ErrorCode::NoData, "no pipeline records");
  std::size_t json = 0, comp = 0, parse = 0, e2e = 0;
  for (const auto& r : records) {
    json += r.json_valid ? 1 : 0;
    comp += r.compilable ? 1 : 0;
    parse += r.sql_parses ? 1 : 0;
    e2e += r.end_to_end ? 1 : 0;
  }
  const auto n = static_cast<double>(records.size());
  PipelineRates rates;
  rates.records = records.size();
  rates.json_valid = static_cast<double>(json) / n;
  rates.compilable = static_cast<double>(comp) / n;
  rates.sql_parses = static_cast<double>(parse) / n;
  rates.end_to_end = static_cast<double>(e2e) / n;
  return rates;
}

}  // namespace sqlstruct

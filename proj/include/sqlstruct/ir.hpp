#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlstruct/ast.hpp"

namespace sqlstruct {

struct QueryIR;

enum class IrExprKind { Column, Star, Literal, Function, Binary, Not, List, Or, Subquery };

/// One expression of the JSON query IR.
///
///   Column    {"col": [table, column]}
///   Star      {"star": true} or {"star": table}
///   Literal   {"value": v} or a bare string/number/bool/null
///   Function  {"func": name, "args": [...], "distinct": bool}
///   Binary    {"op": op, "left": e, "right": e}
///   Not       {"not": e}
///   List      {"list": [...]}          right operand of IN / BETWEEN
///   Or        {"or": [...]}
///   Subquery  {"type": "query", "query": {...}}
struct IrExpr {
  IrExprKind kind = IrExprKind::Literal;
  std::string table;   // Column, Star
  std::string name;    // Column: column name; Function: name; Binary: operator (uppercased)
  nlohmann::json value;  // Literal
  bool distinct = false;
  std::vector<IrExpr> args;  // Function args; Binary left, right; Not operand; List/Or items
  std::shared_ptr<const QueryIR> query;  // Subquery

  bool operator==(const IrExpr& other) const;
};

struct IrSelectItem {
  IrExpr expr;
  std::optional<std::string> alias;

  bool operator==(const IrSelectItem&) const = default;
};

/// A FROM or JOIN source: a table name or a nested query.
struct IrSource {
  std::string table;
  std::shared_ptr<const QueryIR> subquery;
  std::optional<std::string> alias;

  bool operator==(const IrSource& other) const;
};

struct IrJoin {
  IrSource source;
  std::string type = "INNER";   // INNER | LEFT | CROSS
  std::vector<IrExpr> on;       // conjuncts, may be empty

  bool operator==(const IrJoin&) const = default;
};

struct IrOrder {
  IrExpr expr;
  bool desc = false;

  bool operator==(const IrOrder&) const = default;
};

struct QueryIR {
  std::optional<std::string> version;
  std::vector<IrSelectItem> select;
  IrSource from;
  std::vector<IrJoin> joins;
  std::vector<IrExpr> where;
  std::vector<IrExpr> group_by;
  std::vector<IrExpr> having;
  std::vector<IrOrder> order_by;
  std::optional<std::int64_t> limit;
  bool distinct = false;

  bool operator==(const QueryIR&) const = default;
};

enum class IrErrorKind { Json, Schema, Compile };
std::string_view to_string(IrErrorKind kind);

struct IrError {
  IrErrorKind kind = IrErrorKind::Json;
  std::string path;  // JSON pointer to the violation, Schema only
  std::string message;
};

using IrResult = std::variant<QueryIR, IrError>;

/// Removes one surrounding ``` fence (with optional language tag). Sets
/// `stripped` when a fence was found.
std::string strip_code_fences(std::string_view raw, bool* stripped = nullptr);

/// Scalar and aggregate function names the IR accepts.
bool is_known_function(std::string_view name);

IrResult validate_ir(std::string_view raw);
IrResult validate_ir_json(const nlohmann::json& doc);

/// Serializes back to the IR JSON shape (with "type": "query").
nlohmann::ordered_json ir_to_json(const QueryIR& ir);

/// Lowers the IR to an AST; throws IrCompileError for states validation rejects.
SqlAst ir_to_ast(const QueryIR& ir);

/// Fixed clause order, qualified columns, single spaces, no trailing semicolon.
std::string compile_ir(const QueryIR& ir);

struct IrCompileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Compile-style pipeline records

struct PipelineRecord {
  std::string question_id;
  std::string raw_text;
  bool fence_stripped = false;
  bool json_valid = false;
  bool compilable = false;
  bool sql_parses = false;
  bool end_to_end = false;
  std::string sql;    // compiled SQL when compilable
  std::string error;  // first failure, empty when fully successful

  bool operator==(const PipelineRecord&) const = default;
};

class Database;

/// Runs one raw model output through fence stripping, validation, compilation
/// and parsing. With a database, end_to_end means the compiled SQL executes;
/// without one it means compilable and parsed.
PipelineRecord evaluate_pipeline_output(std::string question_id, std::string raw, const Database* db = nullptr);

struct PipelineRates {
  double json_valid = 0.0;
  double compilable = 0.0;
  double sql_parses = 0.0;
  double end_to_end = 0.0;
  std::size_t records = 0;
};

/// Per-flag fractions; throws Error(NoData) on empty input.
PipelineRates pipeline_metrics(std::span<const PipelineRecord> records);

/// True when end_to_end => compilable => json_valid and sql_parses => compilable.
bool flags_consistent(const PipelineRecord& record);

}  // namespace sqlstruct

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqlstruct/metrics.hpp"

struct sqlite3;

namespace sqlstruct {

/// NULL, INTEGER, REAL, TEXT (BLOBs are carried as their bytes).
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

struct ResultTable {
  std::size_t columns = 0;
  std::vector<std::vector<Value>> rows;

  bool operator==(const ResultTable&) const = default;
};

enum class ExecStatus { Ok, Error, Timeout };
enum class ExecError { None, DbNotFound, RejectedWrite, EmptyQuery, MultipleStatements, RowLimit, Sql };

std::string_view to_string(ExecStatus status);
std::string_view to_string(ExecError error);

struct ExecOutcome {
  ExecStatus status = ExecStatus::Error;
  std::optional<ResultTable> result;  // present iff status == Ok
  ExecError error = ExecError::None;
  std::string message;
  double elapsed_ms = 0.0;

  [[nodiscard]] bool ok() const { return status == ExecStatus::Ok; }
};

struct ExecLimits {
  std::chrono::milliseconds timeout{30000};
  std::size_t max_rows = 1'000'000;
};

/// Read-only connection to a SQLite database file.
class Database {
 public:
  /// Opens with SQLITE_OPEN_READONLY. Returns nullopt if the file does not exist or cannot be opened.
  static std::optional<Database> open_read_only(const std::filesystem::path& path, std::string* error = nullptr);

  /// Runs one statement. Statements that would write are rejected before
  /// stepping; the deadline is enforced through the progress handler.
  ExecOutcome execute(std::string_view sql, const ExecLimits& limits = {}) const;

 private:
  struct Closer {
    void operator()(sqlite3* db) const;
  };
  explicit Database(sqlite3* db) : db_(db) {}
  std::unique_ptr<sqlite3, Closer> db_;
};

ExecOutcome execute_query(const std::filesystem::path& db, std::string_view sql, const ExecLimits& limits = {});

/// Row-sequence equality when `ordered`, multiset equality otherwise. Integers,
/// text and NULL compare exactly; any pair involving a REAL compares numerically
/// within `real_tolerance`.
bool results_equivalent(const ResultTable& pred, const ResultTable& gold, bool ordered,
                        double real_tolerance = 1e-6);

/// True when the outermost statement of `sql` carries ORDER BY.
bool has_outer_order_by(std::string_view sql);

struct ExecOptions {
  ExecLimits limits;
  Dialect dialect = Dialect::Sqlite;
};

struct ExecReport {
  std::string question_id;
  std::string db_id;
  std::string model;
  bool ordered = false;
  std::vector<ExecOutcome> outcomes;
  std::vector<bool> exec_correct;
  double exec_acc = 0.0;      // correct / N
  double success_rate = 0.0;  // ok / N
  StructureDistribution all_distribution;
  StructureDistribution correct_distribution;
  std::optional<double> correct_pairwise_sim;
};

/// Executes gold and every candidate against `db`. Throws
/// Error(GoldExecutionFailed) when the gold query does not run.
ExecReport evaluate_generation_set(const GenerationSet& set, const std::filesystem::path& db,
                                   const ExecOptions& options = {});

struct Thresholds {
  double accuracy = 0.8;   // exec_acc >= this
  double structure = 0.5;  // correct-subset majority ratio <= this
};

/// At least two execution-correct candidates spanning two or more structures.
bool exec_correct_struct_diff(const ExecReport& report);
/// exec_acc >= accuracy and correct-subset majority ratio <= structure.
bool high_acc_low_struct(const ExecReport& report, const Thresholds& thresholds);

struct InconsistencyIndicators {
  double high_acc_low_struct = 0.0;
  double exec_corr_struct_diff = 0.0;
};

InconsistencyIndicators inconsistency_indicators(std::span<const ExecReport> reports, const Thresholds& thresholds = {});

/// Per-question line of the execution report.
struct ExecSummary {
  std::string question_id;
  std::string db_id;
  std::string model;
  std::size_t n = 0;
  bool excluded = false;
  std::string error;
  bool ordered = false;
  std::size_t parsed = 0;  // M over all candidates
  std::size_t correct = 0;
  double exec_acc = 0.0;
  double success_rate = 0.0;
  std::size_t distinct_all = 0;
  std::size_t distinct_corr = 0;
  std::optional<double> majority_corr;
  std::optional<double> ast_sim_corr;
  bool high_acc_low_struct = false;
  bool exec_corr_struct_diff = false;

  bool operator==(const ExecSummary&) const = default;
};

ExecSummary summarize_report(const ExecReport& report, const Thresholds& thresholds);

/// One Table-2 row.
struct ExecAggregate {
  std::string model;
  std::size_t questions = 0;
  std::size_t excluded = 0;
  std::optional<double> exec_acc;
  std::optional<double> success_rate;
  std::optional<double> distinct_all;
  std::optional<double> distinct_corr;
  std::optional<double> ast_sim_corr;
  std::optional<double> high_acc_low_struct;
  std::optional<double> exec_corr_struct_diff;
};

ExecAggregate aggregate_exec(std::string model, std::span<const ExecSummary> summaries);

}  // namespace sqlstruct

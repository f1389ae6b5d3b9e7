#include "sqlstruct/execution.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>

#include "sqlstruct/error.hpp"
#include "sqlstruct/lexer.hpp"

namespace sqlstruct {

std::string_view to_string(ExecStatus status) {
  switch (status) {
    case ExecStatus::Ok:
      return "ok";
    case ExecStatus::Error:
      return "error";
    case ExecStatus::Timeout:
      return "timeout";
  }
  return "unknown";
}

std::string_view to_string(ExecError error) {
  switch (error) {
    case ExecError::None:
      return "none";
    case ExecError::DbNotFound:
      return "db-not-found";
    case ExecError::RejectedWrite:
      return "rejected-write";
    case ExecError::EmptyQuery:
      return "empty-query";
    case ExecError::MultipleStatements:
      return "multiple-statements";
    case ExecError::RowLimit:
      return "row-limit";
    case ExecError::Sql:
      return "sql";
  }
  return "unknown";
}

void Database::Closer::operator()(sqlite3* db) const { sqlite3_close_v2(db); }

std::optional<Database> Database::open_read_only(const std::filesystem::path& path, std::string* error) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    if (error != nullptr) *error = "database not found: " + path.string();
    return std::nullopt;
  }
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.string().c_str(), &raw, SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
  if (rc != SQLITE_OK) {
    if (error != nullptr) *error = raw != nullptr ? sqlite3_errmsg(raw) : "cannot open database";
    sqlite3_close_v2(raw);
    return std::nullopt;
  }
  return Database(raw);
}

namespace {

using Clock = std::chrono::steady_clock;

struct StmtCloser {
  void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};

int deadline_handler(void* arg) {
  const auto* deadline = static_cast<const Clock::time_point*>(arg);
  return Clock::now() >= *deadline ? 1 : 0;
}

// whitespace, semicolons and comments
bool only_trivia(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c) || c == ';') {
      ++i;
    } else if (s.substr(i, 2) == "--") {
      const auto nl = s.find('\n', i);
      i = nl == std::string_view::npos ? s.size() : nl + 1;
    } else if (s.substr(i, 2) == "/*") {
      const auto end = s.find("*/", i + 2);
      i = end == std::string_view::npos ? s.size() : end + 2;
    } else {
      return false;
    }
  }
  return true;
}

Value read_cell(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_INTEGER:
      return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT:
      return sqlite3_column_double(stmt, col);
    case SQLITE_TEXT:
    case SQLITE_BLOB: {
      const auto* bytes = static_cast<const char*>(sqlite3_column_blob(stmt, col));
      const int size = sqlite3_column_bytes(stmt, col);
      return std::string(bytes == nullptr ? "" : bytes, static_cast<std::size_t>(size));
    }
    default:
      return std::monostate{};
  }
}

}  // namespace

ExecOutcome Database::execute(std::string_view sql, const ExecLimits& limits) const {
  ExecOutcome out;
  const auto start = Clock::now();
  auto finish = [&](ExecStatus status, ExecError error, std::string message) {
    out.status = status;
    out.error = error;
    out.message = std::move(message);
    out.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (status != ExecStatus::Ok) out.result.reset();
    return out;
  };

  if (only_trivia(sql)) return finish(ExecStatus::Error, ExecError::EmptyQuery, "empty query");

  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db_.get(), sql.data(), static_cast<int>(sql.size()), &raw, &tail);
  std::unique_ptr<sqlite3_stmt, StmtCloser> stmt(raw);
  if (rc != SQLITE_OK) return finish(ExecStatus::Error, ExecError::Sql, sqlite3_errmsg(db_.get()));
  if (!stmt) return finish(ExecStatus::Error, ExecError::EmptyQuery, "empty query");
  if (tail != nullptr && !only_trivia(std::string_view(tail, sql.data() + sql.size() - tail))) {
    return finish(ExecStatus::Error, ExecError::MultipleStatements, "more than one statement");
  }
  if (sqlite3_stmt_readonly(stmt.get()) == 0) {
    return finish(ExecStatus::Error, ExecError::RejectedWrite, "statement would modify the database");
  }

  const Clock::time_point deadline = start + limits.timeout;
  sqlite3_progress_handler(db_.get(), 1000, &deadline_handler, const_cast<Clock::time_point*>(&deadline));
  struct HandlerReset {
    sqlite3* db;
    ~HandlerReset() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
  } reset{db_.get()};

  ResultTable table;
  table.columns = static_cast<std::size_t>(sqlite3_column_count(stmt.get()));
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    if (table.rows.size() >= limits.max_rows) {
      return finish(ExecStatus::Error, ExecError::RowLimit, "result exceeds row limit");
    }
    std::vector<Value> row;
    row.reserve(table.columns);
    for (std::size_t c = 0; c < table.columns; ++c) row.push_back(read_cell(stmt.get(), static_cast<int>(c)));
    table.rows.push_back(std::move(row));
  }
  if (rc == SQLITE_INTERRUPT) return finish(ExecStatus::Timeout, ExecError::None, "query exceeded time limit");
  if (rc != SQLITE_DONE) return finish(ExecStatus::Error, ExecError::Sql, sqlite3_errmsg(db_.get()));
  out.result = std::move(table);
  return finish(ExecStatus::Ok, ExecError::None, {});
}

ExecOutcome execute_query(const std::filesystem::path& db, std::string_view sql, const ExecLimits& limits) {
  std::string error;
  auto database = Database::open_read_only(db, &error);
  if (!database) {
    ExecOutcome out;
    out.status = ExecStatus::Error;
    out.error = ExecError::DbNotFound;
    out.message = error;
    return out;
  }
  return database->execute(sql, limits);
}

// ---------------------------------------------------------------------------
// Result comparison

namespace {

int type_rank(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return 0;
  if (std::holds_alternative<std::string>(v)) return 2;
  return 1;
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

bool cells_equal(const Value& a, const Value& b, double tol) {
  const int ra = type_rank(a);
  if (ra != type_rank(b)) return false;
  switch (ra) {
    case 0:
      return true;
    case 2:
      return std::get<std::string>(a) == std::get<std::string>(b);
    default:
      if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
        return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
      }
      return std::fabs(as_double(a) - as_double(b)) <= tol;
  }
}

bool rows_equal(const std::vector<Value>& a, const std::vector<Value>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!cells_equal(a[i], b[i], tol)) return false;
  }
  return true;
}

bool cell_less(const Value& a, const Value& b) {
  const int ra = type_rank(a);
  const int rb = type_rank(b);
  if (ra != rb) return ra < rb;
  if (ra == 2) return std::get<std::string>(a) < std::get<std::string>(b);
  if (ra == 1) return as_double(a) < as_double(b);
  return false;
}

bool row_less(const std::vector<Value>& a, const std::vector<Value>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), cell_less);
}

}  // namespace

bool results_equivalent(const ResultTable& pred, const ResultTable& gold, bool ordered, double real_tolerance) {
  if (pred.columns != gold.columns || pred.rows.size() != gold.rows.size()) return false;
  if (ordered) {
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
      if (!rows_equal(pred.rows[i], gold.rows[i], real_tolerance)) return false;
    }
    return true;
  }
  auto a = pred.rows;
  auto b = gold.rows;
  std::sort(a.begin(), a.end(), row_less);
  std::sort(b.begin(), b.end(), row_less);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!rows_equal(a[i], b[i], real_tolerance)) return false;
  }
  return true;
}

bool has_outer_order_by(std::string_view sql) {
  std::optional<LexError> error;
  const auto tokens = tokenize(sql, &error);
  int depth = 0;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].is_symbol("(")) {
      ++depth;
    } else if (tokens[i].is_symbol(")")) {
      --depth;
    } else if (depth == 0 && tokens[i].is_keyword("ORDER") && tokens[i + 1].is_keyword("BY")) {
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Generation-set evaluation

ExecReport evaluate_generation_set(const GenerationSet& set, const std::filesystem::path& db,
                                   const ExecOptions& options) {
  std::string open_error;
  auto database = Database::open_read_only(db, &open_error);
  if (!database) throw Error(ErrorCode::GoldExecutionFailed, open_error);

  const ExecOutcome gold = database->execute(set.gold_sql, options.limits);
  if (!gold.ok()) {
    throw Error(ErrorCode::GoldExecutionFailed,
                "question " + set.question_id + ": " + std::string(to_string(gold.status)) + ": " + gold.message);
  }

  ExecReport report;
  report.question_id = set.question_id;
  report.db_id = set.db_id;
  report.model = set.provenance.model;
  report.ordered = has_outer_order_by(set.gold_sql);

  const auto keys = key_candidates(set, options.dialect);
  std::vector<KeyResult> correct_keys;
  std::size_t ok = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    ExecOutcome outcome = database->execute(set.candidates[i], options.limits);
    const bool is_correct = outcome.ok() && results_equivalent(*outcome.result, *gold.result, report.ordered);
    if (outcome.ok()) ++ok;
    if (is_correct) {
      ++correct;
      correct_keys.push_back(keys[i]);
    }
    report.exec_correct.push_back(is_correct);
    report.outcomes.push_back(std::move(outcome));
  }
  const auto n = static_cast<double>(set.candidates.size());
  report.exec_acc = set.candidates.empty() ? 0.0 : static_cast<double>(correct) / n;
  report.success_rate = set.candidates.empty() ? 0.0 : static_cast<double>(ok) / n;
  report.all_distribution = build_distribution(keys);
  report.correct_distribution = build_distribution(correct_keys);
  report.correct_pairwise_sim = pairwise_similarity(valid_keys(correct_keys));
  return report;
}

bool exec_correct_struct_diff(const ExecReport& report) {
  return report.correct_distribution.total >= 2 && diversity(report.correct_distribution) >= 2;
}

bool high_acc_low_struct(const ExecReport& report, const Thresholds& thresholds) {
  const auto majority = consistency(report.correct_distribution);
  return report.exec_acc >= thresholds.accuracy && majority && *majority <= thresholds.structure;
}

InconsistencyIndicators inconsistency_indicators(std::span<const ExecReport> reports, const Thresholds& thresholds) {
  if (reports.empty()) throw Error(ErrorCode::NoData, "no execution reports");
  std::size_t hals = 0;
  std::size_t ecsd = 0;
  for (const auto& r : reports) {
    if (high_acc_low_struct(r, thresholds)) ++hals;
    if (exec_correct_struct_diff(r)) ++ecsd;
  }
  const auto n = static_cast<double>(reports.size());
  return {static_cast<double>(hals) / n, static_cast<double>(ecsd) / n};
}

ExecSummary summarize_report(const ExecReport& report, const Thresholds& thresholds) {
  ExecSummary s;
  s.question_id = report.question_id;
  s.db_id = report.db_id;
  s.model = report.model;
  s.n = report.outcomes.size();
  s.ordered = report.ordered;
  s.parsed = report.all_distribution.valid_count;
  s.correct = report.correct_distribution.total;
  s.exec_acc = report.exec_acc;
  s.success_rate = report.success_rate;
  s.distinct_all = diversity(report.all_distribution);
  s.distinct_corr = diversity(report.correct_distribution);
  s.majority_corr = consistency(report.correct_distribution);
  s.ast_sim_corr = report.correct_pairwise_sim;
  s.high_acc_low_struct = high_acc_low_struct(report, thresholds);
  s.exec_corr_struct_diff = exec_correct_struct_diff(report);
  return s;
}

ExecAggregate aggregate_exec(std::string model, std::span<const ExecSummary> summaries) {
  ExecAggregate a;
  a.model = std::move(model);
  std::vector<std::optional<double>> acc, success, distinct_all, distinct_corr, sim, hals, ecsd;
  for (const auto& s : summaries) {
    ++a.questions;
    if (s.excluded) {
      ++a.excluded;
      continue;
    }
    acc.emplace_back(s.exec_acc);
    success.emplace_back(s.success_rate);
    if (s.parsed > 0) distinct_all.emplace_back(static_cast<double>(s.distinct_all));
    distinct_corr.emplace_back(static_cast<double>(s.distinct_corr));
    sim.push_back(s.ast_sim_corr);
    hals.emplace_back(s.high_acc_low_struct ? 1.0 : 0.0);
    ecsd.emplace_back(s.exec_corr_struct_diff ? 1.0 : 0.0);
  }
  a.exec_acc = mean_defined(acc);
  a.success_rate = mean_defined(success);
  a.distinct_all = mean_defined(distinct_all);
  a.distinct_corr = mean_defined(distinct_corr);
  a.ast_sim_corr = mean_defined(sim);
  a.high_acc_low_struct = mean_defined(hals);
  a.exec_corr_struct_diff = mean_defined(ecsd);
  return a;
}

}  // namespace sqlstruct

#include <gtest/gtest.h>

#include "sqlstruct/error.hpp"
#include "sqlstruct/execution.hpp"
#include "sqlstruct/ingest.hpp"
#include "support/testing.hpp"

using namespace sqlstruct;
namespace st = sqlstruct::testing;
namespace fs = std::filesystem;

namespace {

fs::path db(const std::string& id) { return st::spider_dir() / "database" / id / (id + ".sqlite"); }

ResultTable table(std::vector<std::vector<Value>> rows) {
  ResultTable t;
  t.columns = rows.empty() ? 1 : rows[0].size();
  t.rows = std::move(rows);
  return t;
}

GenerationSet make_set(std::string gold, std::vector<std::string> candidates) {
  GenerationSet s;
  s.question_id = "q";
  s.db_id = "concert_singer";
  s.gold_sql = std::move(gold);
  s.candidates = std::move(candidates);
  return s;
}

std::vector<std::string> repeat(const std::string& sql, std::size_t n) { return std::vector<std::string>(n, sql); }

}  // namespace

TEST(Execute, ReturnsRows) {
  const auto out = execute_query(db("concert_singer"), "SELECT count(*) FROM singer");
  ASSERT_TRUE(out.ok()) << out.message;
  ASSERT_EQ(out.result->rows.size(), 1u);
  EXPECT_EQ(out.result->rows[0][0], Value(std::int64_t{6}));
}

TEST(Execute, ValueTypes) {
  const auto out = execute_query(db("pets_1"), "SELECT PetType, pet_age, weight, NULL FROM Pets WHERE PetID = 2002");
  ASSERT_TRUE(out.ok());
  const auto& row = out.result->rows.at(0);
  EXPECT_EQ(row[0], Value(std::string("dog")));
  EXPECT_EQ(row[1], Value(std::int64_t{2}));
  EXPECT_EQ(row[2], Value(13.4));
  EXPECT_EQ(row[3], Value(std::monostate{}));
}

TEST(Execute, MissingDatabase) {
  const auto out = execute_query(st::spider_dir() / "nope.sqlite", "SELECT 1");
  EXPECT_EQ(out.status, ExecStatus::Error);
  EXPECT_EQ(out.error, ExecError::DbNotFound);
}

TEST(Execute, RejectsWrites) {
  for (const char* sql : {"DELETE FROM singer", "DROP TABLE singer", "INSERT INTO singer(Name) VALUES ('x')",
                          "UPDATE singer SET Age = 1"}) {
    const auto out = execute_query(db("concert_singer"), sql);
    EXPECT_EQ(out.error, ExecError::RejectedWrite) << sql;
  }
  EXPECT_EQ(execute_query(db("concert_singer"), "SELECT count(*) FROM singer").result->rows[0][0],
            Value(std::int64_t{6}));
}

TEST(Execute, StatementShape) {
  EXPECT_EQ(execute_query(db("concert_singer"), "  -- nothing\n ").error, ExecError::EmptyQuery);
  EXPECT_EQ(execute_query(db("concert_singer"), "SELECT 1; SELECT 2").error, ExecError::MultipleStatements);
  EXPECT_TRUE(execute_query(db("concert_singer"), "SELECT 1;  -- trailing\n").ok());
  EXPECT_EQ(execute_query(db("concert_singer"), "SELECT nope FROM singer").error, ExecError::Sql);
}

TEST(Execute, Timeout) {
  ExecLimits limits;
  limits.timeout = std::chrono::milliseconds(50);
  const auto out = execute_query(
      db("concert_singer"), "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT count(*) FROM c",
      limits);
  EXPECT_EQ(out.status, ExecStatus::Timeout);
  EXPECT_LT(out.elapsed_ms, 5000.0);
}

TEST(Execute, RowLimit) {
  ExecLimits limits;
  limits.max_rows = 3;
  const auto out = execute_query(db("concert_singer"), "SELECT * FROM singer", limits);
  EXPECT_EQ(out.error, ExecError::RowLimit);
}

TEST(Equivalence, OrderedVersusUnordered) {
  const auto a = table({{std::int64_t{1}}, {std::int64_t{2}}, {std::int64_t{3}}});
  const auto b = table({{std::int64_t{3}}, {std::int64_t{1}}, {std::int64_t{2}}});
  EXPECT_TRUE(results_equivalent(a, b, false));
  EXPECT_FALSE(results_equivalent(a, b, true));
  EXPECT_TRUE(results_equivalent(a, a, true));
}

TEST(Equivalence, MultisetCountsDuplicates) {
  const auto a = table({{std::string("a")}, {std::string("a")}, {std::string("b")}});
  const auto b = table({{std::string("a")}, {std::string("b")}, {std::string("b")}});
  EXPECT_FALSE(results_equivalent(a, b, false));
  const auto c = table({{std::string("a")}, {std::string("b")}});
  EXPECT_FALSE(results_equivalent(a, c, false));
}

TEST(Equivalence, NumericTolerance) {
  EXPECT_TRUE(results_equivalent(table({{1.0}}), table({{std::int64_t{1}}}), true));
  EXPECT_TRUE(results_equivalent(table({{0.1 + 0.2}}), table({{0.3}}), true));
  EXPECT_FALSE(results_equivalent(table({{1.5}}), table({{std::int64_t{1}}}), true));
  EXPECT_FALSE(results_equivalent(table({{std::string("1")}}), table({{std::int64_t{1}}}), true));
  EXPECT_FALSE(results_equivalent(table({{std::monostate{}}}), table({{std::int64_t{0}}}), true));
  EXPECT_TRUE(results_equivalent(table({{std::monostate{}}}), table({{std::monostate{}}}), true));
}

TEST(Equivalence, ColumnCountMatters) {
  ResultTable a;
  a.columns = 2;
  ResultTable b;
  b.columns = 1;
  EXPECT_FALSE(results_equivalent(a, b, false));
}

TEST(OuterOrderBy, Detection) {
  EXPECT_TRUE(has_outer_order_by("SELECT a FROM t ORDER BY a"));
  EXPECT_TRUE(has_outer_order_by("select a from t order\n by a limit 1"));
  EXPECT_FALSE(has_outer_order_by("SELECT a FROM t WHERE b IN (SELECT b FROM u ORDER BY b LIMIT 1)"));
  EXPECT_FALSE(has_outer_order_by("SELECT 'order by' FROM t"));
  EXPECT_FALSE(has_outer_order_by("SELECT a FROM t"));
}

TEST(GenerationSetEval, GoldAgainstItself) {
  const auto r = evaluate_generation_set(make_set("SELECT name FROM singer", repeat("SELECT name FROM singer", 3)),
                                         db("concert_singer"));
  EXPECT_DOUBLE_EQ(r.exec_acc, 1.0);
  EXPECT_DOUBLE_EQ(r.success_rate, 1.0);
  EXPECT_FALSE(r.ordered);
}

TEST(GenerationSetEval, PermutedRowsWithoutOrderBy) {
  const auto r = evaluate_generation_set(
      make_set("SELECT name FROM singer", {"SELECT name FROM singer ORDER BY name", "SELECT name FROM singer ORDER BY age"}),
      db("concert_singer"));
  EXPECT_DOUBLE_EQ(r.exec_acc, 1.0);
}

TEST(GenerationSetEval, PermutedRowsWithOrderBy) {
  const auto r = evaluate_generation_set(
      make_set("SELECT name FROM singer ORDER BY age DESC",
               {"SELECT name FROM singer ORDER BY age", "SELECT name FROM singer ORDER BY age DESC"}),
      db("concert_singer"));
  EXPECT_TRUE(r.ordered);
  EXPECT_EQ(r.exec_correct, (std::vector<bool>{false, true}));
  EXPECT_DOUBLE_EQ(r.exec_acc, 0.5);
}

TEST(GenerationSetEval, FailuresCountAgainstAccuracy) {
  const auto r = evaluate_generation_set(
      make_set("SELECT count(*) FROM singer", {"SELECT count(*) FROM singer", "SELECT bogus FROM singer", "SELEC"}),
      db("concert_singer"));
  EXPECT_DOUBLE_EQ(r.exec_acc, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.success_rate, 1.0 / 3.0);
  EXPECT_EQ(r.all_distribution.valid_count, 2u);
}

TEST(GenerationSetEval, GoldMustExecute) {
  try {
    evaluate_generation_set(make_set("SELECT bogus FROM singer", {"SELECT 1"}), db("concert_singer"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GoldExecutionFailed);
  }
  EXPECT_THROW(evaluate_generation_set(make_set("SELECT 1", {"SELECT 1"}), st::spider_dir() / "missing.sqlite"), Error);
}

TEST(Indicators, SixFourSplitIsNotLowStructure) {
  auto cands = repeat("SELECT count(*) FROM singer", 6);
  for (int i = 0; i < 4; ++i) cands.push_back("SELECT count(singer_id) FROM singer");
  const auto r = evaluate_generation_set(make_set("SELECT count(*) FROM singer", cands), db("concert_singer"));
  EXPECT_DOUBLE_EQ(r.exec_acc, 1.0);
  EXPECT_TRUE(exec_correct_struct_diff(r));
  EXPECT_FALSE(high_acc_low_struct(r, Thresholds{}));
  const auto s = summarize_report(r, Thresholds{});
  EXPECT_EQ(s.distinct_corr, 2u);
  EXPECT_DOUBLE_EQ(*s.majority_corr, 0.6);
  EXPECT_DOUBLE_EQ(*s.ast_sim_corr, (15.0 + 6.0) / 45.0);
}

TEST(Indicators, EvenSplitIsLowStructure) {
  auto cands = repeat("SELECT count(*) FROM singer", 5);
  for (int i = 0; i < 5; ++i) cands.push_back("SELECT count(singer_id) FROM singer");
  const auto r = evaluate_generation_set(make_set("SELECT count(*) FROM singer", cands), db("concert_singer"));
  EXPECT_TRUE(high_acc_low_struct(r, Thresholds{}));
  EXPECT_FALSE(high_acc_low_struct(r, Thresholds{0.8, 0.4}));
  std::vector<ExecReport> rs = {r};
  const auto ind = inconsistency_indicators(rs);
  EXPECT_DOUBLE_EQ(ind.high_acc_low_struct, 1.0);
  EXPECT_DOUBLE_EQ(ind.exec_corr_struct_diff, 1.0);
}

TEST(Indicators, SingleCorrectIsNotADifference) {
  const auto r = evaluate_generation_set(
      make_set("SELECT count(*) FROM singer", {"SELECT count(*) FROM singer", "SELECT 0"}), db("concert_singer"));
  EXPECT_FALSE(exec_correct_struct_diff(r));
}

TEST(Aggregate, ExcludedAndEmptyQuestions) {
  ExecSummary a;
  a.exec_acc = 1.0;
  a.success_rate = 1.0;
  a.parsed = 10;
  a.distinct_all = 3;
  a.distinct_corr = 2;
  a.ast_sim_corr = 0.5;
  a.high_acc_low_struct = true;
  ExecSummary b;  // nothing parsed, nothing correct
  b.exec_acc = 0.0;
  ExecSummary c;
  c.excluded = true;
  c.error = "gold failed";
  std::vector<ExecSummary> ss = {a, b, c};
  const auto g = aggregate_exec("m", ss);
  EXPECT_EQ(g.questions, 3u);
  EXPECT_EQ(g.excluded, 1u);
  EXPECT_DOUBLE_EQ(*g.exec_acc, 0.5);
  EXPECT_DOUBLE_EQ(*g.distinct_all, 3.0);
  EXPECT_DOUBLE_EQ(*g.distinct_corr, 1.0);
  EXPECT_DOUBLE_EQ(*g.ast_sim_corr, 0.5);
  EXPECT_DOUBLE_EQ(*g.high_acc_low_struct, 0.5);
  EXPECT_DOUBLE_EQ(*g.exec_corr_struct_diff, 0.0);
}

TEST(SpiderFixture, EveryGoldMatchesItself) {
  const auto ds = load_spider(st::spider_dir());
  ASSERT_GE(ds.questions.size(), 50u);
  EXPECT_TRUE(ds.warnings.empty());
  for (const auto& q : ds.questions) {
    GenerationSet s;
    s.question_id = q.question_id;
    s.db_id = q.db_id;
    s.gold_sql = q.gold_sql;
    s.candidates = {q.gold_sql};
    const auto r = evaluate_generation_set(s, *ds.database(q.db_id));
    EXPECT_DOUBLE_EQ(r.exec_acc, 1.0) << q.gold_sql;
  }
}

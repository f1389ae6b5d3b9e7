#include <gtest/gtest.h>

#include "sqlstruct/canonical.hpp"
#include "sqlstruct/error.hpp"
#include "sqlstruct/execution.hpp"
#include "sqlstruct/ir.hpp"
#include "sqlstruct/parser.hpp"
#include "support/testing.hpp"

using namespace sqlstruct;
namespace st = sqlstruct::testing;

namespace {

QueryIR valid(const nlohmann::json& doc) {
  auto r = validate_ir_json(doc);
  if (const auto* e = std::get_if<IrError>(&r)) {
    ADD_FAILURE() << to_string(e->kind) << " " << e->path << ": " << e->message << "\n" << doc.dump();
    return {};
  }
  return std::get<QueryIR>(r);
}

IrError invalid(std::string_view raw) {
  auto r = validate_ir(raw);
  if (!std::holds_alternative<IrError>(r)) {
    ADD_FAILURE() << "accepted: " << raw;
    return {};
  }
  return std::get<IrError>(r);
}

std::string key_of(std::string_view sql) {
  auto r = canonical_key(sql);
  return has_key(r) ? std::get<StructureKey>(r).key : "<fail>";
}

nlohmann::json minimal(nlohmann::json where) {
  return {{"type", "query"},
          {"query", {{"select", {{{"col", {"t", "a"}}}}}, {"from", {{"table", "t"}}}, {"where", std::move(where)}}}};
}

std::string compile_where(const nlohmann::json& pred) { return compile_ir(valid(minimal({pred}))); }

}  // namespace

TEST(Compile, StadiumExample) {
  const auto sql = compile_ir(valid(st::stadium_ir()));
  EXPECT_EQ(sql, "SELECT stadium.Name, stadium.Capacity FROM stadium ORDER BY stadium.Average DESC LIMIT 1");
  EXPECT_EQ(key_of(sql), key_of("SELECT stadium.Name, stadium.Capacity FROM stadium ORDER BY stadium.Average DESC LIMIT 1"));
}

TEST(Compile, GroupByHavingExample) {
  const auto sql = compile_ir(valid(st::countries_ir()));
  const auto printed =
      "SELECT COUNTRIES.CountryName, COUNTRIES.CountryId FROM COUNTRIES JOIN CAR_MAKERS ON COUNTRIES.CountryId = "
      "CAR_MAKERS.Country GROUP BY COUNTRIES.CountryId HAVING COUNT(*) >= 1;";
  EXPECT_EQ(key_of(sql), key_of(printed)) << sql;
  const auto key = key_of(sql);
  EXPECT_NE(key.find("group by countries.countryid"), std::string::npos) << key;
  EXPECT_NE(key.find("having count(*) >= 1"), std::string::npos) << key;
}

TEST(Compile, Literals) {
  EXPECT_EQ(compile_where({{"op", "="}, {"left", {{"col", {"t", "b"}}}}, {"right", "it's"}}),
            "SELECT t.a FROM t WHERE t.b = 'it''s'");
  EXPECT_EQ(compile_where({{"op", ">"}, {"left", {{"col", {"t", "b"}}}}, {"right", -3}}),
            "SELECT t.a FROM t WHERE t.b > -3");
  EXPECT_EQ(compile_where({{"op", "="}, {"left", {{"col", {"t", "b"}}}}, {"right", true}}),
            "SELECT t.a FROM t WHERE t.b = 1");
  EXPECT_EQ(compile_where({{"op", "<"}, {"left", {{"col", {"t", "b"}}}}, {"right", 2.0}}),
            "SELECT t.a FROM t WHERE t.b < 2.0");
  EXPECT_EQ(compile_where({{"op", "is"}, {"left", {{"col", {"t", "b"}}}}, {"right", nullptr}}),
            "SELECT t.a FROM t WHERE t.b IS NULL");
}

TEST(Compile, OperatorSpellings) {
  EXPECT_EQ(compile_where({{"op", "!="}, {"left", {{"col", {"t", "b"}}}}, {"right", 1}}),
            "SELECT t.a FROM t WHERE t.b <> 1");
  EXPECT_EQ(compile_where({{"op", "not  in"}, {"left", {{"col", {"t", "b"}}}}, {"right", {{"list", {1, 2}}}}}),
            "SELECT t.a FROM t WHERE t.b NOT IN (1, 2)");
  EXPECT_EQ(compile_where({{"op", "between"}, {"left", {{"col", {"t", "b"}}}}, {"right", {{"list", {1, 2}}}}}),
            "SELECT t.a FROM t WHERE t.b BETWEEN 1 AND 2");
}

TEST(Compile, WhereListIsAConjunction) {
  const auto sql = compile_ir(valid(minimal({{{"op", "="}, {"left", {{"col", {"t", "b"}}}}, {"right", 1}},
                                             {{"op", "="}, {"left", {{"col", {"t", "c"}}}}, {"right", 2}}})));
  EXPECT_EQ(sql, "SELECT t.a FROM t WHERE t.b = 1 AND t.c = 2");
}

TEST(Compile, OrAndNot) {
  const nlohmann::json pred = {
      {"or",
       {{{"op", "="}, {"left", {{"col", {"t", "b"}}}}, {"right", 1}},
        {{"not", {{"op", "like"}, {"left", {{"col", {"t", "c"}}}}, {"right", "%x%"}}}}}}};
  const auto sql = compile_where(pred);
  EXPECT_TRUE(parsed(parse_sql(sql))) << sql;
  EXPECT_NE(sql.find(" OR "), std::string::npos);
  EXPECT_NE(sql.find("NOT "), std::string::npos);
}

TEST(Compile, QuotesAwkwardIdentifiers) {
  nlohmann::json doc = {
      {"type", "query"},
      {"query", {{"select", {{{"col", {"my table", "order"}}}}}, {"from", {{"table", "my table"}}}}}};
  const auto sql = compile_ir(valid(doc));
  EXPECT_EQ(sql, "SELECT \"my table\".\"order\" FROM \"my table\"");
  EXPECT_TRUE(parsed(parse_sql(sql)));
}

TEST(Compile, SubqueryAndDerivedTable) {
  nlohmann::json doc = {
      {"type", "query"},
      {"query",
       {{"select", {{{"col", {"d", "a"}}}}},
        {"from",
         {{"subquery", {{"select", {{{"col", {"t", "a"}}}}}, {"from", {{"table", "t"}}}}}, {"alias", "d"}}},
        {"where",
         {{{"op", "in"},
           {"left", {{"col", {"d", "a"}}}},
           {"right", {{"type", "query"}, {"query", {{"select", {{{"col", {"u", "a"}}}}}, {"from", {{"table", "u"}}}}}}}}}}}}};
  const auto sql = compile_ir(valid(doc));
  EXPECT_EQ(sql, "SELECT d.a FROM (SELECT t.a FROM t) AS d WHERE d.a IN (SELECT u.a FROM u)");
}

TEST(Validate, JsonErrors) {
  EXPECT_EQ(invalid("not json").kind, IrErrorKind::Json);
  EXPECT_EQ(invalid("{\"type\": \"query\",").kind, IrErrorKind::Json);
}

TEST(Validate, SchemaErrorsCarryPaths) {
  auto e = invalid(R"({"type": "query", "query": {"from": {"table": "t"}}})");
  EXPECT_EQ(e.kind, IrErrorKind::Schema);
  EXPECT_EQ(e.path, "/query/select");

  e = invalid(R"({"type": "query", "query": {"select": [{"func": "EVAL", "args": []}], "from": {"table": "t"}}})");
  EXPECT_EQ(e.kind, IrErrorKind::Schema);
  EXPECT_EQ(e.path.rfind("/query/select/0", 0), 0u) << e.path;

  e = invalid(R"({"type": "query", "query": {"select": [{"star": true}], "from": {"table": "t"}, "limit": -1}})");
  EXPECT_EQ(e.path, "/query/limit");

  e = invalid(R"({"type": "query", "query": {"select": [{"col": ["t"]}], "from": {"table": "t"}}})");
  EXPECT_EQ(e.kind, IrErrorKind::Schema);

  e = invalid(R"({"type": "nope", "query": {"select": [{"star": true}], "from": {"table": "t"}}})");
  EXPECT_EQ(e.path, "/type");
}

TEST(Validate, StructuralRules) {
  // star only as the sole COUNT argument
  invalid(R"({"type": "query", "query": {"select": [{"func": "SUM", "args": [{"star": true}]}], "from": {"table": "t"}}})");
  // BETWEEN needs exactly two bounds
  invalid(R"({"type": "query", "query": {"select": [{"star": true}], "from": {"table": "t"},
             "where": [{"op": "between", "left": {"col": ["t", "a"]}, "right": {"list": [1, 2, 3]}}]}})");
  // derived tables need an alias
  invalid(R"({"type": "query", "query": {"select": [{"star": true}],
             "from": {"subquery": {"select": [{"star": true}], "from": {"table": "t"}}}}})");
  // unknown operator
  invalid(R"({"type": "query", "query": {"select": [{"star": true}], "from": {"table": "t"},
             "where": [{"op": "~~", "left": 1, "right": 2}]}})");
}

TEST(Validate, FencedOutput) {
  bool stripped = false;
  EXPECT_EQ(strip_code_fences("```json\n{\"a\": 1}\n```", &stripped), "{\"a\": 1}");
  EXPECT_TRUE(stripped);
  EXPECT_EQ(strip_code_fences("{\"a\": 1}", &stripped), "{\"a\": 1}");
  EXPECT_FALSE(stripped);
  EXPECT_TRUE(std::holds_alternative<QueryIR>(validate_ir("```\n" + st::stadium_ir().dump() + "\n```")));
}

TEST(Validate, KnownFunctions) {
  EXPECT_TRUE(is_known_function("count"));
  EXPECT_TRUE(is_known_function("Group_Concat"));
  EXPECT_FALSE(is_known_function("like"));
  EXPECT_FALSE(is_known_function("eval"));
}

TEST(IrJson, RoundTrip) {
  const auto ir = valid(st::countries_ir());
  const auto again = valid(nlohmann::json(ir_to_json(ir)));
  EXPECT_TRUE(ir == again);
  EXPECT_EQ(compile_ir(ir), compile_ir(again));
}

TEST(Pipeline, Flags) {
  auto r = evaluate_pipeline_output("q1", "```json\n" + st::stadium_ir().dump() + "\n```");
  EXPECT_TRUE(r.fence_stripped);
  EXPECT_TRUE(r.json_valid);
  EXPECT_TRUE(r.compilable);
  EXPECT_TRUE(r.sql_parses);
  EXPECT_TRUE(r.end_to_end);
  EXPECT_TRUE(r.error.empty());
  EXPECT_TRUE(flags_consistent(r));

  r = evaluate_pipeline_output("q2", "SELECT 1");
  EXPECT_FALSE(r.json_valid);
  EXPECT_FALSE(r.compilable);
  EXPECT_FALSE(r.error.empty());

  r = evaluate_pipeline_output("q3", R"({"type": "query", "query": {"from": {"table": "t"}}})");
  EXPECT_TRUE(r.json_valid);
  EXPECT_FALSE(r.compilable);
  EXPECT_TRUE(flags_consistent(r));
}

TEST(Pipeline, EndToEndUsesTheDatabase) {
  auto db = Database::open_read_only(st::spider_dir() / "database" / "concert_singer" / "concert_singer.sqlite");
  ASSERT_TRUE(db);
  auto ok = evaluate_pipeline_output("q", st::stadium_ir().dump(), &*db);
  EXPECT_TRUE(ok.end_to_end);
  auto bad = evaluate_pipeline_output("q", st::countries_ir().dump(), &*db);  // tables not in this database
  EXPECT_TRUE(bad.sql_parses);
  EXPECT_FALSE(bad.end_to_end);
  EXPECT_TRUE(flags_consistent(bad));
}

TEST(Pipeline, Rates) {
  const auto rs = st::nested_pipeline_records(10, 9, 8, 6, 7);
  for (const auto& r : rs) EXPECT_TRUE(flags_consistent(r));
  const auto rates = pipeline_metrics(rs);
  EXPECT_EQ(rates.records, 10u);
  EXPECT_DOUBLE_EQ(rates.json_valid, 0.9);
  EXPECT_DOUBLE_EQ(rates.compilable, 0.8);
  EXPECT_DOUBLE_EQ(rates.sql_parses, 0.6);
  EXPECT_DOUBLE_EQ(rates.end_to_end, 0.7);
  std::vector<PipelineRecord> none;
  EXPECT_THROW(pipeline_metrics(none), Error);
}

TEST(Pipeline, InconsistentFlags) {
  PipelineRecord r;
  r.compilable = true;
  EXPECT_FALSE(flags_consistent(r));
  r.json_valid = true;
  EXPECT_TRUE(flags_consistent(r));
  r.compilable = false;
  r.sql_parses = true;
  EXPECT_FALSE(flags_consistent(r));
}

TEST(IrProperty, RandomIrsCompileToParseableSql) {
  st::Rng rng(5150);
  for (int i = 0; i < 300; ++i) {
    const auto doc = st::random_ir(rng);
    const auto ir = valid(doc);
    const auto sql = compile_ir(ir);
    auto p = parse_sql(sql);
    ASSERT_TRUE(parsed(p)) << sql << "\n" << std::get<ParseFailure>(p).message << "\n" << doc.dump();
    ASSERT_EQ(compile_ir(valid(nlohmann::json(ir_to_json(ir)))), sql);
  }
}

TEST(IrProperty, CompiledSqlIsAFixedPointOfTheKey) {
  st::Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const auto sql = compile_ir(valid(st::random_ir(rng)));
    const auto k = key_of(sql);
    ASSERT_NE(k, "<fail>") << sql;
    ASSERT_EQ(key_of(k), k) << sql;
  }
}

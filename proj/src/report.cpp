#include "sqlstruct/report.hpp"

#include <cstdio>

#include "sqlstruct/error.hpp"
#include "sqlstruct/ingest.hpp"

namespace sqlstruct {

ReportFormat parse_report_format(std::string_view text) {
  if (text == "jsonl") return ReportFormat::Jsonl;
  if (text == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::InvalidInput, "unknown format: " + std::string(text));
}

std::string_view to_string(ReportFormat format) { return format == ReportFormat::Jsonl ? "jsonl" : "csv"; }

std::string_view to_string(ReportTable table) {
  switch (table) {
    case ReportTable::MetricQuestions:
      return "metrics_questions";
    case ReportTable::Table1:
      return "table1";
    case ReportTable::ExecQuestions:
      return "exec_questions";
    case ReportTable::Table2:
      return "table2";
    case ReportTable::RobustnessFamilies:
      return "robustness_families";
    case ReportTable::Robustness:
      return "robustness";
    case ReportTable::PipelineRecords:
      return "pipeline_records";
    case ReportTable::Table3:
      return "table3";
  }
  return "unknown";
}

const std::vector<std::string>& csv_header(ReportTable table) {
  static const std::vector<std::string> metric_questions = {
      "question_id", "db_id",   "model",        "n",          "m",        "distinct",
      "majority",    "entropy", "gold",         "pairwise_sim", "failures", "gold_parse_ok"};
  static const std::vector<std::string> table1 = {"model",   "questions", "excluded", "distinct",
                                                  "majority", "entropy",  "gold",     "parse_failure_rate"};
  static const std::vector<std::string> exec_questions = {
      "question_id",   "db_id",         "model",         "n",           "excluded",      "error",
      "ordered",       "parsed",        "correct",       "exec_acc",    "success_rate",  "distinct_all",
      "distinct_corr", "majority_corr", "ast_sim_corr",  "high_acc_low_struct", "exec_corr_struct_diff"};
  static const std::vector<std::string> table2 = {
      "model",         "questions",    "excluded",     "exec_acc",           "success_rate",
      "distinct_all",  "distinct_corr", "ast_sim_corr", "high_acc_low_struct", "exec_corr_struct_diff"};
  static const std::vector<std::string> robustness_families = {
      "family_id", "model", "kind", "variants", "ast_sim", "sensitivity", "sensitive", "excluded", "distinct"};
  static const std::vector<std::string> robustness = {"model",    "kind",     "families",    "excluded",
                                                      "ast_sim",  "distinct", "sensitivity", "sensitive_frac"};
  static const std::vector<std::string> pipeline_records = {
      "question_id", "fence_stripped", "json_valid", "compilable", "sql_parses", "end_to_end", "sql", "error"};
  static const std::vector<std::string> table3 = {"records", "json_valid_rate", "compilable_rate", "sql_parse_rate",
                                                  "end_to_end_success"};
  switch (table) {
    case ReportTable::MetricQuestions:
      return metric_questions;
    case ReportTable::Table1:
      return table1;
    case ReportTable::ExecQuestions:
      return exec_questions;
    case ReportTable::Table2:
      return table2;
    case ReportTable::RobustnessFamilies:
      return robustness_families;
    case ReportTable::Robustness:
      return robustness;
    case ReportTable::PipelineRecords:
      return pipeline_records;
    case ReportTable::Table3:
      return table3;
  }
  throw std::logic_error("unknown report table");
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> get_opt(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const MetricRecord& r) {
  j = nlohmann::json::object();
  j["question_id"] = r.question_id;
  j["db_id"] = r.db_id;
  j["model"] = r.model;
  j["n"] = r.n;
  j["m"] = r.m;
  j["distinct"] = r.k_distinct;
  j["majority"] = opt(r.majority);
  j["entropy"] = opt(r.entropy_bits);
  j["gold"] = opt(r.gold_fraction);
  j["pairwise_sim"] = opt(r.pairwise_sim);
  j["failures"] = r.failure_count;
  j["gold_parse_ok"] = r.gold_parse_ok;
}

void from_json(const nlohmann::json& j, MetricRecord& r) {
  r.question_id = j.at("question_id").get<std::string>();
  r.db_id = j.at("db_id").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.m = j.at("m").get<std::size_t>();
  r.k_distinct = j.at("distinct").get<std::size_t>();
  r.majority = get_opt(j, "majority");
  r.entropy_bits = get_opt(j, "entropy");
  r.gold_fraction = get_opt(j, "gold");
  r.pairwise_sim = get_opt(j, "pairwise_sim");
  r.failure_count = j.at("failures").get<std::size_t>();
  r.gold_parse_ok = j.at("gold_parse_ok").get<bool>();
}

void to_json(nlohmann::json& j, const MetricSummary& r) {
  j = nlohmann::json::object();
  j["model"] = r.model;
  j["questions"] = r.questions;
  j["excluded"] = r.excluded;
  j["distinct"] = opt(r.distinct);
  j["majority"] = opt(r.majority);
  j["entropy"] = opt(r.entropy);
  j["gold"] = opt(r.gold);
  j["parse_failure_rate"] = r.parse_failure_rate;
}

void from_json(const nlohmann::json& j, MetricSummary& r) {
  r.model = j.at("model").get<std::string>();
  r.questions = j.at("questions").get<std::size_t>();
  r.excluded = j.at("excluded").get<std::size_t>();
  r.distinct = get_opt(j, "distinct");
  r.majority = get_opt(j, "majority");
  r.entropy = get_opt(j, "entropy");
  r.gold = get_opt(j, "gold");
  r.parse_failure_rate = j.at("parse_failure_rate").get<double>();
}

void to_json(nlohmann::json& j, const ExecSummary& r) {
  j = nlohmann::json::object();
  j["question_id"] = r.question_id;
  j["db_id"] = r.db_id;
  j["model"] = r.model;
  j["n"] = r.n;
  j["excluded"] = r.excluded;
  j["error"] = r.error;
  j["ordered"] = r.ordered;
  j["parsed"] = r.parsed;
  j["correct"] = r.correct;
  j["exec_acc"] = r.exec_acc;
  j["success_rate"] = r.success_rate;
  j["distinct_all"] = r.distinct_all;
  j["distinct_corr"] = r.distinct_corr;
  j["majority_corr"] = opt(r.majority_corr);
  j["ast_sim_corr"] = opt(r.ast_sim_corr);
  j["high_acc_low_struct"] = r.high_acc_low_struct;
  j["exec_corr_struct_diff"] = r.exec_corr_struct_diff;
}

void from_json(const nlohmann::json& j, ExecSummary& r) {
  r.question_id = j.at("question_id").get<std::string>();
  r.db_id = j.at("db_id").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.excluded = j.at("excluded").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.ordered = j.at("ordered").get<bool>();
  r.parsed = j.at("parsed").get<std::size_t>();
  r.correct = j.at("correct").get<std::size_t>();
  r.exec_acc = j.at("exec_acc").get<double>();
  r.success_rate = j.at("success_rate").get<double>();
  r.distinct_all = j.at("distinct_all").get<std::size_t>();
  r.distinct_corr = j.at("distinct_corr").get<std::size_t>();
  r.majority_corr = get_opt(j, "majority_corr");
  r.ast_sim_corr = get_opt(j, "ast_sim_corr");
  r.high_acc_low_struct = j.at("high_acc_low_struct").get<bool>();
  r.exec_corr_struct_diff = j.at("exec_corr_struct_diff").get<bool>();
}

void to_json(nlohmann::json& j, const ExecAggregate& r) {
  j = nlohmann::json::object();
  j["model"] = r.model;
  j["questions"] = r.questions;
  j["excluded"] = r.excluded;
  j["exec_acc"] = opt(r.exec_acc);
  j["success_rate"] = opt(r.success_rate);
  j["distinct_all"] = opt(r.distinct_all);
  j["distinct_corr"] = opt(r.distinct_corr);
  j["ast_sim_corr"] = opt(r.ast_sim_corr);
  j["high_acc_low_struct"] = opt(r.high_acc_low_struct);
  j["exec_corr_struct_diff"] = opt(r.exec_corr_struct_diff);
}

void from_json(const nlohmann::json& j, ExecAggregate& r) {
  r.model = j.at("model").get<std::string>();
  r.questions = j.at("questions").get<std::size_t>();
  r.excluded = j.at("excluded").get<std::size_t>();
  r.exec_acc = get_opt(j, "exec_acc");
  r.success_rate = get_opt(j, "success_rate");
  r.distinct_all = get_opt(j, "distinct_all");
  r.distinct_corr = get_opt(j, "distinct_corr");
  r.ast_sim_corr = get_opt(j, "ast_sim_corr");
  r.high_acc_low_struct = get_opt(j, "high_acc_low_struct");
  r.exec_corr_struct_diff = get_opt(j, "exec_corr_struct_diff");
}

void to_json(nlohmann::json& j, const RobustnessRecord& r) {
  j = nlohmann::json::object();
  j["family_id"] = r.family_id;
  j["model"] = r.model;
  j["kind"] = to_string(r.kind);
  j["variants"] = r.variants;
  j["ast_sim"] = opt(r.cons_para);
  j["sensitivity"] = opt(r.sensitivity);
  j["sensitive"] = r.sensitive;
  j["excluded"] = r.excluded;
  j["distinct"] = r.distinct;
}

void from_json(const nlohmann::json& j, RobustnessRecord& r) {
  r.family_id = j.at("family_id").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.kind = parse_perturbation_kind(j.at("kind").get<std::string>());
  r.variants = j.at("variants").get<std::size_t>();
  r.cons_para = get_opt(j, "ast_sim");
  r.sensitivity = get_opt(j, "sensitivity");
  r.sensitive = j.at("sensitive").get<bool>();
  r.excluded = j.at("excluded").get<bool>();
  r.distinct = j.at("distinct").get<std::size_t>();
}

void to_json(nlohmann::json& j, const RobustnessSummary& r) {
  j = nlohmann::json::object();
  j["model"] = r.model;
  j["kind"] = to_string(r.kind);
  j["families"] = r.families;
  j["excluded"] = r.excluded;
  j["ast_sim"] = opt(r.ast_sim);
  j["distinct"] = opt(r.distinct);
  j["sensitivity"] = opt(r.sensitivity);
  j["sensitive_frac"] = opt(r.sensitive_frac);
}

void from_json(const nlohmann::json& j, RobustnessSummary& r) {
  r.model = j.at("model").get<std::string>();
  r.kind = parse_perturbation_kind(j.at("kind").get<std::string>());
  r.families = j.at("families").get<std::size_t>();
  r.excluded = j.at("excluded").get<std::size_t>();
  r.ast_sim = get_opt(j, "ast_sim");
  r.distinct = get_opt(j, "distinct");
  r.sensitivity = get_opt(j, "sensitivity");
  r.sensitive_frac = get_opt(j, "sensitive_frac");
}

void to_json(nlohmann::json& j, const PipelineRecord& r) {
  j = nlohmann::json::object();
  j["question_id"] = r.question_id;
  j["raw"] = r.raw_text;
  j["fence_stripped"] = r.fence_stripped;
  j["json_valid"] = r.json_valid;
  j["compilable"] = r.compilable;
  j["sql_parses"] = r.sql_parses;
  j["end_to_end"] = r.end_to_end;
  j["sql"] = r.sql;
  j["error"] = r.error;
}

void from_json(const nlohmann::json& j, PipelineRecord& r) {
  auto flag = [&](const char* key) {
    const auto it = j.find(key);
    return it != j.end() && it->get<bool>();
  };
  auto text = [&](const char* key) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? std::string() : it->get<std::string>();
  };
  r.question_id = j.at("question_id").get<std::string>();
  r.raw_text = text("raw");
  r.fence_stripped = flag("fence_stripped");
  r.json_valid = j.at("json_valid").get<bool>();
  r.compilable = j.at("compilable").get<bool>();
  r.sql_parses = j.at("sql_parses").get<bool>();
  r.end_to_end = j.at("end_to_end").get<bool>();
  r.sql = text("sql");
  r.error = text("error");
}

void to_json(nlohmann::json& j, const PipelineRates& r) {
  j = nlohmann::json::object();
  j["records"] = r.records;
  j["json_valid_rate"] = r.json_valid;
  j["compilable_rate"] = r.compilable;
  j["sql_parse_rate"] = r.sql_parses;
  j["end_to_end_success"] = r.end_to_end;
}

void from_json(const nlohmann::json& j, PipelineRates& r) {
  r.records = j.at("records").get<std::size_t>();
  r.json_valid = j.at("json_valid_rate").get<double>();
  r.compilable = j.at("compilable_rate").get<double>();
  r.sql_parses = j.at("sql_parse_rate").get<double>();
  r.end_to_end = j.at("end_to_end_success").get<double>();
}

// ---------------------------------------------------------------------------
// CSV rows

namespace {

template <typename Record>
struct Traits;

class Row {
 public:
  explicit Row(int precision) : precision_(precision) {}

  Row& text(std::string_view s) { return push(csv_escape(s)); }
  Row& count(std::size_t n) { return push(std::to_string(n)); }
  Row& flag(bool b) { return push(b ? "true" : "false"); }
  Row& real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision_, v);
    return push(buf);
  }
  Row& real(const std::optional<double>& v) { return v ? real(*v) : push(""); }

  std::string line() const { return out_ + "\n"; }

 private:
  Row& push(std::string_view cell) {
    if (!first_) out_ += ',';
    first_ = false;
    out_ += cell;
    return *this;
  }
  int precision_;
  bool first_ = true;
  std::string out_;
};

template <>
struct Traits<MetricRecord> {
  static constexpr ReportTable table = ReportTable::MetricQuestions;
  static void row(Row& w, const MetricRecord& r) {
    w.text(r.question_id).text(r.db_id).text(r.model).count(r.n).count(r.m).count(r.k_distinct);
    w.real(r.majority).real(r.entropy_bits).real(r.gold_fraction).real(r.pairwise_sim);
    w.count(r.failure_count).flag(r.gold_parse_ok);
  }
};

template <>
struct Traits<MetricSummary> {
  static constexpr ReportTable table = ReportTable::Table1;
  static void row(Row& w, const MetricSummary& r) {
    w.text(r.model).count(r.questions).count(r.excluded);
    w.real(r.distinct).real(r.majority).real(r.entropy).real(r.gold).real(r.parse_failure_rate);
  }
};

template <>
struct Traits<ExecSummary> {
  static constexpr ReportTable table = ReportTable::ExecQuestions;
  static void row(Row& w, const ExecSummary& r) {
    w.text(r.question_id).text(r.db_id).text(r.model).count(r.n).flag(r.excluded).text(r.error);
    w.flag(r.ordered).count(r.parsed).count(r.correct).real(r.exec_acc).real(r.success_rate);
    w.count(r.distinct_all).count(r.distinct_corr).real(r.majority_corr).real(r.ast_sim_corr);
    w.flag(r.high_acc_low_struct).flag(r.exec_corr_struct_diff);
  }
};

template <>
struct Traits<ExecAggregate> {
  static constexpr ReportTable table = ReportTable::Table2;
  static void row(Row& w, const ExecAggregate& r) {
    w.text(r.model).count(r.questions).count(r.excluded).real(r.exec_acc).real(r.success_rate);
    w.real(r.distinct_all).real(r.distinct_corr).real(r.ast_sim_corr);
    w.real(r.high_acc_low_struct).real(r.exec_corr_struct_diff);
  }
};

template <>
struct Traits<RobustnessRecord> {
  static constexpr ReportTable table = ReportTable::RobustnessFamilies;
  static void row(Row& w, const RobustnessRecord& r) {
    w.text(r.family_id).text(r.model).text(to_string(r.kind)).count(r.variants);
    w.real(r.cons_para).real(r.sensitivity).flag(r.sensitive).flag(r.excluded).count(r.distinct);
  }
};

template <>
struct Traits<RobustnessSummary> {
  static constexpr ReportTable table = ReportTable::Robustness;
  static void row(Row& w, const RobustnessSummary& r) {
    w.text(r.model).text(to_string(r.kind)).count(r.families).count(r.excluded);
    w.real(r.ast_sim).real(r.distinct).real(r.sensitivity).real(r.sensitive_frac);
  }
};

template <>
struct Traits<PipelineRecord> {
  static constexpr ReportTable table = ReportTable::PipelineRecords;
  static void row(Row& w, const PipelineRecord& r) {
    w.text(r.question_id).flag(r.fence_stripped).flag(r.json_valid).flag(r.compilable);
    w.flag(r.sql_parses).flag(r.end_to_end).text(r.sql).text(r.error);
  }
};

template <>
struct Traits<PipelineRates> {
  static constexpr ReportTable table = ReportTable::Table3;
  static void row(Row& w, const PipelineRates& r) {
    w.count(r.records).real(r.json_valid).real(r.compilable).real(r.sql_parses).real(r.end_to_end);
  }
};

}  // namespace

template <typename Record>
std::string render_report(std::span<const Record> records, ReportFormat format, int precision) {
  std::string out;
  if (format == ReportFormat::Jsonl) {
    for (const auto& r : records) {
      nlohmann::json j = r;
      out += j.dump();
      out += '\n';
    }
    return out;
  }
  const auto& header = csv_header(Traits<Record>::table);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& r : records) {
    Row w(precision);
    Traits<Record>::row(w, r);
    out += w.line();
  }
  return out;
}

template <typename Record>
void write_report(std::span<const Record> records, const std::filesystem::path& path, ReportFormat format,
                  int precision) {
  write_file_atomic(path, render_report(records, format, precision));
}

template <typename Record>
std::vector<Record> parse_jsonl(std::string_view text) {
  std::vector<Record> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<Record>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

template <typename Record>
std::vector<Record> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl<Record>(read_file(path));
}

#define SQLSTRUCT_REPORT_INSTANTIATE(T)                                                                 \
  template std::string render_report<T>(std::span<const T>, ReportFormat, int);                       \
  template void write_report<T>(std::span<const T>, const std::filesystem::path&, ReportFormat, int); \
  template std::vector<T> parse_jsonl<T>(std::string_view);                                            \
  template std::vector<T> read_jsonl<T>(const std::filesystem::path&);

SQLSTRUCT_REPORT_INSTANTIATE(MetricRecord)
SQLSTRUCT_REPORT_INSTANTIATE(MetricSummary)
SQLSTRUCT_REPORT_INSTANTIATE(ExecSummary)
SQLSTRUCT_REPORT_INSTANTIATE(ExecAggregate)
SQLSTRUCT_REPORT_INSTANTIATE(RobustnessRecord)
SQLSTRUCT_REPORT_INSTANTIATE(RobustnessSummary)
SQLSTRUCT_REPORT_INSTANTIATE(PipelineRecord)
SQLSTRUCT_REPORT_INSTANTIATE(PipelineRates)

#undef SQLSTRUCT_REPORT_INSTANTIATE

}  // namespace sqlstruct

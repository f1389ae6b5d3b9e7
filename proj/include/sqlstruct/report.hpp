#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlstruct/execution.hpp"
#include "sqlstruct/ir.hpp"
#include "sqlstruct/metrics.hpp"
#include "sqlstruct/robustness.hpp"

namespace sqlstruct {

enum class ReportFormat { Jsonl, Csv };
ReportFormat parse_report_format(std::string_view text);
std::string_view to_string(ReportFormat format);

/// Every CSV the tools emit. Table1..Table3 and Robustness are per-model aggregates;
/// the per-item tables carry one row per question, family or record.
enum class ReportTable {
  MetricQuestions,
  Table1,
  ExecQuestions,
  Table2,
  RobustnessFamilies,
  Robustness,
  PipelineRecords,
  Table3,
};

std::string_view to_string(ReportTable table);
const std::vector<std::string>& csv_header(ReportTable table);

// JSON forms (full precision, null for undefined values).
void to_json(nlohmann::json& j, const MetricRecord& r);
void from_json(const nlohmann::json& j, MetricRecord& r);
void to_json(nlohmann::json& j, const MetricSummary& r);
void from_json(const nlohmann::json& j, MetricSummary& r);
void to_json(nlohmann::json& j, const ExecSummary& r);
void from_json(const nlohmann::json& j, ExecSummary& r);
void to_json(nlohmann::json& j, const ExecAggregate& r);
void from_json(const nlohmann::json& j, ExecAggregate& r);
void to_json(nlohmann::json& j, const RobustnessRecord& r);
void from_json(const nlohmann::json& j, RobustnessRecord& r);
void to_json(nlohmann::json& j, const RobustnessSummary& r);
void from_json(const nlohmann::json& j, RobustnessSummary& r);
void to_json(nlohmann::json& j, const PipelineRecord& r);
void from_json(const nlohmann::json& j, PipelineRecord& r);
void to_json(nlohmann::json& j, const PipelineRates& r);
void from_json(const nlohmann::json& j, PipelineRates& r);

/// Serializes homogeneous records. CSV floats are fixed to `precision`
/// decimals; JSONL keeps full precision.
template <typename Record>
std::string render_report(std::span<const Record> records, ReportFormat format, int precision = 4);

/// Atomic write of render_report's output; throws Error(Io).
template <typename Record>
void write_report(std::span<const Record> records, const std::filesystem::path& path, ReportFormat format,
                  int precision = 4);

template <typename Record>
std::vector<Record> read_jsonl(const std::filesystem::path& path);

template <typename Record>
std::vector<Record> parse_jsonl(std::string_view text);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace sqlstruct

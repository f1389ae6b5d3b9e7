#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlstruct/metrics.hpp"
#include "sqlstruct/robustness.hpp"
#include "sqlstruct/schema.hpp"

namespace sqlstruct {

// ---------------------------------------------------------------------------
// Spider datasets

struct SpiderQuestion {
  std::string question_id;  // zero-based position in the questions file
  std::string db_id;
  std::string question;
  std::string gold_sql;

  bool operator==(const SpiderQuestion&) const = default;
};

struct SpiderDataset {
  std::filesystem::path root;
  std::vector<SpiderQuestion> questions;
  std::vector<SchemaCatalog> catalogs;                         // tables-file order
  std::map<std::string, std::filesystem::path> database_paths;  // only databases that exist
  std::vector<std::string> warnings;

  [[nodiscard]] const SchemaCatalog* catalog(const std::string& db_id) const;
  [[nodiscard]] std::optional<std::filesystem::path> database(const std::string& db_id) const;
  [[nodiscard]] const SpiderQuestion* find_question(const std::string& question_id) const;
};

/// Reads `dev.json` (or `questions.json`), `tables.json` and
/// `database/<db_id>/<db_id>.sqlite` under `dir`. A missing tables file is
/// Error(Io); each missing database or unknown db_id adds one warning.
SpiderDataset load_spider(const std::filesystem::path& dir);

/// Parses the Spider tables-file array into catalogs.
std::vector<SchemaCatalog> parse_spider_tables(const nlohmann::json& tables);

// ---------------------------------------------------------------------------
// Generation records (JSONL, one entry per line)

enum class GenerationMode { Direct, Compile };
std::string_view to_string(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view text);

inline constexpr int kRecordVersion = 1;

struct GenerationEntry {
  std::string question_id;
  std::string db_id;
  std::string question;
  std::string gold_sql;
  std::string model;
  double temperature = 1.0;
  std::size_t k = 0;
  std::vector<std::string> samples;
  std::optional<std::string> variant_of;
  std::optional<PerturbationKind> perturbation_kind;
  GenerationMode mode = GenerationMode::Direct;
  nlohmann::json sample_meta;  // per-sample request metadata, null when absent

  bool operator==(const GenerationEntry&) const = default;
};

nlohmann::ordered_json to_json(const GenerationEntry& entry);
/// Throws Error(InvalidInput) naming the offending field.
GenerationEntry generation_entry_from_json(const nlohmann::json& j);

/// Candidate SQL for one sample: fenced output is unwrapped; in compile mode
/// the IR is compiled, and an IR that fails yields an empty string.
std::string candidate_sql(const std::string& sample, GenerationMode mode);

GenerationSet to_generation_set(const GenerationEntry& entry);

struct GenerationFile {
  std::vector<GenerationEntry> entries;
  std::vector<GenerationSet> sets;        // entries without variant_of, file order
  std::vector<VariantFamily> families;    // grouped by (model, base, kind), first-seen order
};

/// Errors carry the 1-based line number: malformed JSON, samples != k,
/// duplicate (model, question_id), dangling variant_of.
GenerationFile load_generations(const std::filesystem::path& path);
GenerationFile parse_generations(std::string_view text);

void write_generations(const std::vector<GenerationEntry>& entries, const std::filesystem::path& path);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace sqlstruct

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlstruct/ir.hpp"

namespace sqlstruct::testing {

using Rng = std::mt19937_64;

// fixture locations baked in by CMake
std::filesystem::path source_dir();
std::filesystem::path fixture_source();  // tests/fixtures
std::filesystem::path spider_dir();      // materialized copy with .sqlite files
std::filesystem::path cli_path();

/// Copies a Spider-format tree and builds database/<db>/<db>.sqlite from each
/// <db>.sql script. Existing .sqlite files are rebuilt.
void materialize_spider(const std::filesystem::path& src, const std::filesystem::path& dst);

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path path;
};

// ---------------------------------------------------------------------------
// Surface-variant query generator

/// A randomly shaped SELECT and two ways of spelling it.
struct QueryPair {
  std::string a;
  std::string b;
};

/// Each call picks one query structure and renders it twice with fresh alias
/// names, keyword casing, whitespace, conjunct order and optional semicolons.
QueryPair random_query_pair(Rng& rng);

/// One spelling of symbol `s` (0..5): a single-table select whose canonical
/// key is symbol_key(s).
std::string symbol_sql(std::size_t s, Rng& rng);
std::string symbol_key(std::size_t s);
inline constexpr const char* kUnparseable = "SELEC broken FROM";

// ---------------------------------------------------------------------------
// Brute-force oracles over symbol lists (nullopt = unparseable)

using Symbols = std::vector<std::optional<std::size_t>>;

Symbols random_symbols(Rng& rng, std::size_t max_size, std::size_t alphabet, double bottom_rate);

struct OracleMetrics {
  std::size_t m = 0;
  std::size_t k = 0;
  std::optional<double> cons;
  std::optional<double> entropy;
  std::optional<double> gold;
  std::optional<double> pairwise;
};

OracleMetrics oracle_metrics(const Symbols& xs, std::size_t gold_symbol);

/// Majority key text by counting, ties to the smallest key string; nullopt when M = 0.
std::optional<std::string> oracle_majority(const Symbols& xs);

struct OracleFamily {
  std::optional<double> cons_para;  // nullopt when some majority is undefined
  std::optional<double> sens;
};

OracleFamily oracle_family(const std::vector<Symbols>& inputs);  // inputs[0] is the base

// ---------------------------------------------------------------------------
// IR generator

/// A random IR document over the concert_singer-like schema that validates.
nlohmann::json random_ir(Rng& rng);

/// The worked compile-style example over stadium.
nlohmann::json stadium_ir();
/// GROUP BY + HAVING IR over countries / car_makers.
nlohmann::json countries_ir();

// ---------------------------------------------------------------------------
// Pipeline fixture

/// Builds `total` records whose flag counts are exactly the given numbers,
/// nested so every record satisfies flags_consistent.
std::vector<PipelineRecord> nested_pipeline_records(std::size_t total, std::size_t json_valid,
                                                    std::size_t compilable, std::size_t sql_parses,
                                                    std::size_t end_to_end);

}  // namespace sqlstruct::testing

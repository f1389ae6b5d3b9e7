#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqlstruct/canonical.hpp"

namespace sqlstruct {

struct Provenance {
  std::string model;
  double temperature = 1.0;
  std::size_t k = 0;

  bool operator==(const Provenance&) const = default;
};

/// One question's bundle of sampled programs.
struct GenerationSet {
  std::string question_id;
  std::string question;
  std::string db_id;
  std::string gold_sql;
  std::vector<std::string> candidates;
  Provenance provenance;

  bool operator==(const GenerationSet&) const = default;
};

struct StructureGroup {
  StructureKey key;
  std::size_t count = 0;
  double frequency = 0.0;  // count / valid_count
};

/// Counts of distinct structure keys among one question's generations.
/// Groups are sorted by count descending, then key ascending.
struct StructureDistribution {
  std::size_t total = 0;          // N
  std::size_t valid_count = 0;    // M
  std::size_t failure_count = 0;  // N - M
  std::vector<StructureGroup> groups;
};

struct GoldReference {
  std::optional<StructureKey> gold_key;

  [[nodiscard]] bool parse_ok() const { return gold_key.has_value(); }
};

GoldReference make_gold_reference(std::string_view gold_sql, Dialect dialect = Dialect::Sqlite);

/// Canonicalizes every candidate of a generation set, in order.
std::vector<KeyResult> key_candidates(const GenerationSet& set, Dialect dialect = Dialect::Sqlite);

StructureDistribution build_distribution(std::span<const KeyResult> keys);

/// Majority-structure ratio max_k p_k; nullopt when M = 0.
std::optional<double> consistency(const StructureDistribution& d);

/// Number of distinct structures K (0 when M = 0).
std::size_t diversity(const StructureDistribution& d);

/// Base-2 Shannon entropy of the group frequencies; nullopt when M = 0.
std::optional<double> entropy(const StructureDistribution& d);

/// Fraction of valid generations whose key equals the gold key; nullopt when M = 0.
/// Throws Error(GoldUnparseable) when the gold query has no key.
std::optional<double> gold_alignment(const StructureDistribution& d, const GoldReference& gold);

/// Fraction of unordered pairs i < j with equal keys; nullopt for fewer than two keys.
std::optional<double> pairwise_similarity(std::span<const StructureKey> keys);

/// The valid keys of a key list, in order.
std::vector<StructureKey> valid_keys(std::span<const KeyResult> keys);

/// Per-question structural record.
struct MetricRecord {
  std::string question_id;
  std::string db_id;
  std::string model;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k_distinct = 0;
  std::optional<double> majority;
  std::optional<double> entropy_bits;
  std::optional<double> gold_fraction;
  std::optional<double> pairwise_sim;
  std::size_t failure_count = 0;
  bool gold_parse_ok = true;

  bool operator==(const MetricRecord&) const = default;
};

MetricRecord evaluate_structure(const GenerationSet& set, Dialect dialect = Dialect::Sqlite);

/// Dataset-level means over questions with defined values.
struct MetricSummary {
  std::string model;
  std::size_t questions = 0;
  std::size_t excluded = 0;  // M = 0
  std::optional<double> distinct;
  std::optional<double> majority;
  std::optional<double> entropy;
  std::optional<double> gold;
  double parse_failure_rate = 0.0;
};

MetricSummary summarize_metrics(std::string model, std::span<const MetricRecord> records);

/// Unweighted mean of the defined values; nullopt when none.
std::optional<double> mean_defined(std::span<const std::optional<double>> values);

}  // namespace sqlstruct

#include "sqlstruct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sqlstruct/error.hpp"

namespace sqlstruct {

GoldReference make_gold_reference(std::string_view gold_sql, Dialect dialect) {
  auto result = canonical_key(gold_sql, dialect);
  if (auto* key = std::get_if<StructureKey>(&result)) return GoldReference{std::move(*key)};
  return GoldReference{};
}

std::vector<KeyResult> key_candidates(const GenerationSet& set, Dialect dialect) {
  std::vector<KeyResult> keys;
  keys.reserve(set.candidates.size());
  for (const auto& candidate : set.candidates) keys.push_back(canonical_key(candidate, dialect));
  return keys;
}

StructureDistribution build_distribution(std::span<const KeyResult> keys) {
  StructureDistribution d;
  d.total = keys.size();
  std::map<std::string, std::pair<const StructureKey*, std::size_t>> counts;
  for (const auto& result : keys) {
    if (const auto* key = std::get_if<StructureKey>(&result)) {
      auto& slot = counts[key->key];
      slot.first = key;
      ++slot.second;
      ++d.valid_count;
    } else {
      ++d.failure_count;
    }
  }
  d.groups.reserve(counts.size());
  for (const auto& [text, entry] : counts) {
    d.groups.push_back(StructureGroup{*entry.first, entry.second,
                                      static_cast<double>(entry.second) / static_cast<double>(d.valid_count)});
  }
  std::stable_sort(d.groups.begin(), d.groups.end(), [](const StructureGroup& a, const StructureGroup& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.key.key < b.key.key;
  });
  return d;
}

std::optional<double> consistency(const StructureDistribution& d) {
  if (d.valid_count == 0) return std::nullopt;
  std::size_t best = 0;
  for (const auto& g : d.groups) best = std::max(best, g.count);
  return static_cast<double>(best) / static_cast<double>(d.valid_count);
}

std::size_t diversity(const StructureDistribution& d) { return d.groups.size(); }

std::optional<double> entropy(const StructureDistribution& d) {
  if (d.valid_count == 0) return std::nullopt;
  if (d.groups.size() == 1) return 0.0;
  double h = 0.0;
  for (const auto& g : d.groups) {
    const double p = static_cast<double>(g.count) / static_cast<double>(d.valid_count);
    h -= p * std::log2(p);
  }
  return h;
}

std::optional<double> gold_alignment(const StructureDistribution& d, const GoldReference& gold) {
  if (!gold.parse_ok()) throw Error(ErrorCode::GoldUnparseable, "gold SQL has no structure key");
  if (d.valid_count == 0) return std::nullopt;
  for (const auto& g : d.groups) {
    if (g.key == *gold.gold_key) return static_cast<double>(g.count) / static_cast<double>(d.valid_count);
  }
  return 0.0;
}

std::optional<double> pairwise_similarity(std::span<const StructureKey> keys) {
  if (keys.size() < 2) return std::nullopt;
  std::map<std::string_view, std::size_t> counts;
  for (const auto& k : keys) ++counts[k.key];
  std::size_t equal_pairs = 0;
  for (const auto& [_, c] : counts) equal_pairs += c * (c - 1) / 2;
  const std::size_t n = keys.size();
  return static_cast<double>(equal_pairs) / static_cast<double>(n * (n - 1) / 2);
}

std::vector<StructureKey> valid_keys(std::span<const KeyResult> keys) {
  std::vector<StructureKey> out;
  for (const auto& r : keys) {
    if (const auto* key = std::get_if<StructureKey>(&r)) out.push_back(*key);
  }
  return out;
}

MetricRecord evaluate_structure(const GenerationSet& set, Dialect dialect) {
  const auto keys = key_candidates(set, dialect);
  const auto d = build_distribution(keys);
  const auto gold = make_gold_reference(set.gold_sql, dialect);
  const auto valid = valid_keys(keys);

  MetricRecord r;
  r.question_id = set.question_id;
  r.db_id = set.db_id;
  r.model = set.provenance.model;
  r.n = d.total;
  r.m = d.valid_count;
  r.k_distinct = diversity(d);
  r.majority = consistency(d);
  r.entropy_bits = entropy(d);
  r.gold_parse_ok = gold.parse_ok();
  if (gold.parse_ok()) r.gold_fraction = gold_alignment(d, gold);
  r.pairwise_sim = pairwise_similarity(valid);
  r.failure_count = d.failure_count;
  return r;
}

std::optional<double> mean_defined(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

MetricSummary summarize_metrics(std::string model, std::span<const MetricRecord> records) {
  MetricSummary s;
  s.model = std::move(model);
  s.questions = records.size();
  std::vector<std::optional<double>> distinct, majority, ent, gold;
  std::size_t candidates = 0;
  std::size_t failures = 0;
  for (const auto& r : records) {
    candidates += r.n;
    failures += r.failure_count;
    if (r.m == 0) {
      ++s.excluded;
      continue;
    }
    distinct.emplace_back(static_cast<double>(r.k_distinct));
    majority.push_back(r.majority);
    ent.push_back(r.entropy_bits);
    gold.push_back(r.gold_fraction);
  }
  s.distinct = mean_defined(distinct);
  s.majority = mean_defined(majority);
  s.entropy = mean_defined(ent);
  s.gold = mean_defined(gold);
  s.parse_failure_rate = candidates == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(candidates);
  return s;
}

}  // namespace sqlstruct

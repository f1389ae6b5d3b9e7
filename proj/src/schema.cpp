#include "sqlstruct/schema.hpp"

#include <algorithm>
#include <random>

#include "sqlstruct/lexer.hpp"

namespace sqlstruct {

namespace {

// std::shuffle's draw sequence is library-specific; this one is pinned.
template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

std::vector<ForeignKey> SchemaCatalog::dangling_foreign_keys() const {
  auto has_column = [&](const std::string& table, const std::string& column) {
    for (const auto& t : tables) {
      if (!iequals(t.table_name, table)) continue;
      return std::any_of(t.columns.begin(), t.columns.end(), [&](const auto& c) { return iequals(c, column); });
    }
    return false;
  };
  std::vector<ForeignKey> out;
  for (const auto& fk : foreign_keys) {
    if (!has_column(fk.source_table, fk.source_column) || !has_column(fk.target_table, fk.target_column)) {
      out.push_back(fk);
    }
  }
  return out;
}

nlohmann::ordered_json schema_to_json(const SchemaCatalog& catalog) {
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const auto& t : catalog.tables) {
    nlohmann::ordered_json entry;
    entry["table_name"] = t.table_name;
    entry["columns"] = t.columns;
    tables.push_back(std::move(entry));
  }
  nlohmann::ordered_json fks = nlohmann::ordered_json::array();
  for (const auto& fk : catalog.foreign_keys) {
    nlohmann::ordered_json entry;
    entry["source_table"] = fk.source_table;
    entry["source_column"] = fk.source_column;
    entry["target_table"] = fk.target_table;
    entry["target_column"] = fk.target_column;
    fks.push_back(std::move(entry));
  }
  nlohmann::ordered_json out;
  out["tables"] = std::move(tables);
  out["foreign_keys"] = std::move(fks);
  return out;
}

SchemaCatalog shuffle_schema(const SchemaCatalog& catalog, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  SchemaCatalog out = catalog;
  fisher_yates(out.tables, rng);
  for (auto& t : out.tables) fisher_yates(t.columns, rng);

  auto table_rank = [&](const std::string& name) {
    for (std::size_t i = 0; i < out.tables.size(); ++i) {
      if (iequals(out.tables[i].table_name, name)) return i;
    }
    return out.tables.size();
  };
  std::stable_sort(out.foreign_keys.begin(), out.foreign_keys.end(),
                   [&](const ForeignKey& a, const ForeignKey& b) {
                     return table_rank(a.source_table) < table_rank(b.source_table);
                   });
  return out;
}

}  // namespace sqlstruct

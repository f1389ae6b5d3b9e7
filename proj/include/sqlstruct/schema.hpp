#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sqlstruct {

struct TableSchema {
  std::string table_name;
  std::vector<std::string> columns;

  bool operator==(const TableSchema&) const = default;
};

struct ForeignKey {
  std::string source_table;
  std::string source_column;
  std::string target_table;
  std::string target_column;

  bool operator==(const ForeignKey&) const = default;
};

/// Serialized database schema as shown to a model.
struct SchemaCatalog {
  std::string db_id;
  std::vector<TableSchema> tables;
  std::vector<ForeignKey> foreign_keys;

  bool operator==(const SchemaCatalog&) const = default;

  /// Foreign keys whose endpoints name an undeclared table or column.
  [[nodiscard]] std::vector<ForeignKey> dangling_foreign_keys() const;
};

/// {"tables": [{"table_name", "columns"}], "foreign_keys": [{source_table, ...}]}
/// with keys in that order.
nlohmann::ordered_json schema_to_json(const SchemaCatalog& catalog);

/// Deterministic presentation shuffle: table order and the column order inside
/// each table are permuted with a Fisher-Yates pass driven by mt19937_64(seed).
/// Foreign keys are kept and reordered to follow the new table order.
SchemaCatalog shuffle_schema(const SchemaCatalog& catalog, unsigned long long seed);

}  // namespace sqlstruct

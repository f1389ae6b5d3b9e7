#include "sqlstruct/ingest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "sqlstruct/error.hpp"
#include "sqlstruct/ir.hpp"

namespace sqlstruct {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::Io, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot rename into " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Spider

const SchemaCatalog* SpiderDataset::catalog(const std::string& db_id) const {
  for (const auto& c : catalogs) {
    if (c.db_id == db_id) return &c;
  }
  return nullptr;
}

std::optional<fs::path> SpiderDataset::database(const std::string& db_id) const {
  const auto it = database_paths.find(db_id);
  if (it == database_paths.end()) return std::nullopt;
  return it->second;
}

const SpiderQuestion* SpiderDataset::find_question(const std::string& question_id) const {
  for (const auto& q : questions) {
    if (q.question_id == question_id) return &q;
  }
  return nullptr;
}

std::vector<SchemaCatalog> parse_spider_tables(const nlohmann::json& tables) {
  if (!tables.is_array()) throw Error(ErrorCode::InvalidInput, "tables file is not a JSON array");
  std::vector<SchemaCatalog> out;
  for (const auto& t : tables) {
    SchemaCatalog c;
    c.db_id = t.at("db_id").get<std::string>();
    const auto& names = t.contains("table_names_original") ? t["table_names_original"] : t.at("table_names");
    for (const auto& name : names) c.tables.push_back({name.get<std::string>(), {}});

    const auto& cols = t.contains("column_names_original") ? t["column_names_original"] : t.at("column_names");
    std::vector<std::pair<int, std::string>> columns;
    for (const auto& col : cols) {
      const int table = col.at(0).get<int>();
      std::string name = col.at(1).get<std::string>();
      columns.emplace_back(table, name);
      if (table >= 0 && static_cast<std::size_t>(table) < c.tables.size()) {
        c.tables[static_cast<std::size_t>(table)].columns.push_back(std::move(name));
      }
    }
    if (t.contains("foreign_keys")) {
      for (const auto& fk : t["foreign_keys"]) {
        const auto src = fk.at(0).get<std::size_t>();
        const auto dst = fk.at(1).get<std::size_t>();
        if (src >= columns.size() || dst >= columns.size()) continue;
        const auto& [st, sc] = columns[src];
        const auto& [dt, dc] = columns[dst];
        if (st < 0 || dt < 0) continue;
        c.foreign_keys.push_back({c.tables[static_cast<std::size_t>(st)].table_name, sc,
                                  c.tables[static_cast<std::size_t>(dt)].table_name, dc});
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

SpiderDataset load_spider(const fs::path& dir) {
  SpiderDataset ds;
  ds.root = dir;
  const fs::path tables_path = dir / "tables.json";
  if (!fs::is_regular_file(tables_path)) throw Error(ErrorCode::Io, "missing tables file " + tables_path.string());
  fs::path questions_path = dir / "dev.json";
  if (!fs::is_regular_file(questions_path)) questions_path = dir / "questions.json";
  if (!fs::is_regular_file(questions_path)) throw Error(ErrorCode::Io, "missing questions file under " + dir.string());

  try {
    ds.catalogs = parse_spider_tables(nlohmann::json::parse(read_file(tables_path)));
    const auto questions = nlohmann::json::parse(read_file(questions_path));
    if (!questions.is_array()) throw Error(ErrorCode::InvalidInput, "questions file is not a JSON array");
    for (std::size_t i = 0; i < questions.size(); ++i) {
      const auto& q = questions[i];
      SpiderQuestion sq;
      sq.question_id = std::to_string(i);
      sq.db_id = q.at("db_id").get<std::string>();
      sq.question = q.at("question").get<std::string>();
      sq.gold_sql = q.contains("query") ? q["query"].get<std::string>() : q.at("SQL").get<std::string>();
      ds.questions.push_back(std::move(sq));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed Spider file: ") + e.what());
  }

  for (const auto& c : ds.catalogs) {
    const fs::path db = dir / "database" / c.db_id / (c.db_id + ".sqlite");
    if (fs::is_regular_file(db)) ds.database_paths.emplace(c.db_id, db);
  }

  std::map<std::string, std::size_t> missing_db;
  std::map<std::string, std::size_t> unknown_db;
  for (const auto& q : ds.questions) {
    if (ds.catalog(q.db_id) == nullptr) {
      ++unknown_db[q.db_id];
    } else if (!ds.database_paths.count(q.db_id)) {
      ++missing_db[q.db_id];
    }
  }
  for (const auto& [db, n] : unknown_db) {
    ds.warnings.push_back("db_id " + db + " has no schema entry (" + std::to_string(n) + " questions)");
  }
  for (const auto& [db, n] : missing_db) {
    ds.warnings.push_back("database file missing for " + db + " (" + std::to_string(n) + " questions)");
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Generation records

std::string_view to_string(GenerationMode mode) { return mode == GenerationMode::Direct ? "direct" : "compile"; }

GenerationMode parse_generation_mode(std::string_view text) {
  if (text == "direct" || text == "direct_sql") return GenerationMode::Direct;
  if (text == "compile" || text == "compile_style") return GenerationMode::Compile;
  throw Error(ErrorCode::InvalidInput, "unknown generation mode: " + std::string(text));
}

nlohmann::ordered_json to_json(const GenerationEntry& e) {
  nlohmann::ordered_json j;
  j["record_version"] = kRecordVersion;
  j["question_id"] = e.question_id;
  j["db_id"] = e.db_id;
  j["question"] = e.question;
  j["gold_sql"] = e.gold_sql;
  j["model"] = e.model;
  j["mode"] = to_string(e.mode);
  j["decoding"] = {{"temperature", e.temperature}, {"k", e.k}};
  j["samples"] = e.samples;
  if (e.variant_of) j["variant_of"] = *e.variant_of;
  if (e.perturbation_kind) j["perturbation_kind"] = to_string(*e.perturbation_kind);
  if (!e.sample_meta.is_null()) j["sample_meta"] = e.sample_meta;
  return j;
}

namespace {

std::string field_string(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw Error(ErrorCode::InvalidInput, std::string("field ") + key + " must be a string");
  return it->get<std::string>();
}

}  // namespace

GenerationEntry generation_entry_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "entry is not a JSON object");
  if (const auto v = j.find("record_version"); v != j.end() && *v != kRecordVersion) {
    throw Error(ErrorCode::InvalidInput, "unsupported record_version " + v->dump());
  }
  GenerationEntry e;
  e.question_id = field_string(j, "question_id");
  e.db_id = field_string(j, "db_id");
  e.question = j.contains("question") ? field_string(j, "question") : std::string();
  e.gold_sql = field_string(j, "gold_sql");
  e.model = field_string(j, "model");
  if (const auto m = j.find("mode"); m != j.end() && !m->is_null()) e.mode = parse_generation_mode(field_string(j, "mode"));

  const auto dec = j.find("decoding");
  if (dec == j.end() || !dec->is_object()) throw Error(ErrorCode::InvalidInput, "field decoding must be an object");
  if (!dec->contains("k") || !(*dec)["k"].is_number_unsigned()) {
    throw Error(ErrorCode::InvalidInput, "decoding.k must be a non-negative integer");
  }
  e.k = (*dec)["k"].get<std::size_t>();
  if (dec->contains("temperature")) {
    if (!(*dec)["temperature"].is_number()) throw Error(ErrorCode::InvalidInput, "decoding.temperature must be a number");
    e.temperature = (*dec)["temperature"].get<double>();
  }

  const auto samples = j.find("samples");
  if (samples == j.end() || !samples->is_array()) throw Error(ErrorCode::InvalidInput, "field samples must be an array");
  for (const auto& s : *samples) {
    if (!s.is_string()) throw Error(ErrorCode::InvalidInput, "every sample must be a string");
    e.samples.push_back(s.get<std::string>());
  }
  if (e.samples.size() != e.k) {
    throw Error(ErrorCode::InvalidInput, "question " + e.question_id + " has " + std::to_string(e.samples.size()) +
                                             " samples but decoding.k = " + std::to_string(e.k));
  }
  if (const auto v = j.find("variant_of"); v != j.end() && !v->is_null()) e.variant_of = field_string(j, "variant_of");
  if (const auto p = j.find("perturbation_kind"); p != j.end() && !p->is_null()) {
    e.perturbation_kind = parse_perturbation_kind(field_string(j, "perturbation_kind"));
  }
  if (e.variant_of && !e.perturbation_kind) {
    throw Error(ErrorCode::InvalidInput, "variant " + e.question_id + " lacks perturbation_kind");
  }
  if (const auto meta = j.find("sample_meta"); meta != j.end()) e.sample_meta = *meta;
  return e;
}

std::string candidate_sql(const std::string& sample, GenerationMode mode) {
  if (mode == GenerationMode::Direct) return strip_code_fences(sample);
  const auto ir = validate_ir(sample);
  const auto* q = std::get_if<QueryIR>(&ir);
  if (q == nullptr) return {};
  try {
    return compile_ir(*q);
  } catch (const IrCompileError&) {
    return {};
  }
}

GenerationSet to_generation_set(const GenerationEntry& e) {
  GenerationSet s;
  s.question_id = e.question_id;
  s.question = e.question;
  s.db_id = e.db_id;
  s.gold_sql = e.gold_sql;
  s.provenance = {e.model, e.temperature, e.k};
  s.candidates.reserve(e.samples.size());
  for (const auto& sample : e.samples) s.candidates.push_back(candidate_sql(sample, e.mode));
  return s;
}

GenerationFile parse_generations(std::string_view text) {
  GenerationFile file;
  std::map<std::pair<std::string, std::string>, std::size_t> index;  // (model, question_id) -> entry
  std::vector<std::size_t> lines;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    GenerationEntry entry;
    try {
      entry = generation_entry_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidInput, where + e.what());
    }
    if (!index.emplace(std::make_pair(entry.model, entry.question_id), file.entries.size()).second) {
      throw Error(ErrorCode::InvalidInput, where + "duplicate question_id " + entry.question_id + " for model " + entry.model);
    }
    file.entries.push_back(std::move(entry));
    lines.push_back(line_no);
  }

  std::map<std::tuple<std::string, std::string, PerturbationKind>, std::size_t> family_index;
  for (std::size_t i = 0; i < file.entries.size(); ++i) {
    const auto& e = file.entries[i];
    if (!e.variant_of) {
      file.sets.push_back(to_generation_set(e));
      continue;
    }
    const std::string where = "line " + std::to_string(lines[i]) + ": ";
    const auto base = index.find({e.model, *e.variant_of});
    if (base == index.end()) {
      throw Error(ErrorCode::InvalidInput, where + "variant_of names unknown question " + *e.variant_of);
    }
    const auto& base_entry = file.entries[base->second];
    if (base_entry.variant_of) {
      throw Error(ErrorCode::InvalidInput, where + "variant_of names another variant " + *e.variant_of);
    }
    const auto key = std::make_tuple(e.model, *e.variant_of, *e.perturbation_kind);
    auto [it, inserted] = family_index.emplace(key, file.families.size());
    if (inserted) {
      VariantFamily family;
      family.family_id = *e.variant_of + "/" + std::string(to_string(*e.perturbation_kind));
      family.kind = *e.perturbation_kind;
      family.base = to_generation_set(base_entry);
      file.families.push_back(std::move(family));
    }
    file.families[it->second].variants.push_back(to_generation_set(e));
  }
  return file;
}

GenerationFile load_generations(const fs::path& path) { return parse_generations(read_file(path)); }

void write_generations(const std::vector<GenerationEntry>& entries, const fs::path& path) {
  std::string out;
  for (const auto& e : entries) {
    out += to_json(e).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace sqlstruct

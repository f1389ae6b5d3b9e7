#include "sqlstruct/cli.hpp"

#include <iostream>
#include <map>
#include <set>

#include "sqlstruct/error.hpp"
#include "sqlstruct/generation.hpp"
#include "sqlstruct/ir.hpp"

namespace sqlstruct {

namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(p)) throw UsageError(std::string(flag) + ": no such file " + p.string());
}

void require_dir(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_directory(p)) throw UsageError(std::string(flag) + ": no such directory " + p.string());
}

void prepare_out(const fs::path& p) {
  if (p.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(p, ec);
  if (!fs::is_directory(p)) throw UsageError("--out: cannot create directory " + p.string());
}

std::string ext(ReportFormat f) { return f == ReportFormat::Jsonl ? ".jsonl" : ".csv"; }

nlohmann::ordered_json base_manifest(const RunConfig& cfg) {
  nlohmann::ordered_json m;
  m["tool"] = "sqlstruct";
  m["version"] = kToolVersion;
  m["command"] = cfg.command;
  m["seed"] = cfg.seed;
  nlohmann::ordered_json c;
  c["format"] = to_string(cfg.format);
  c["precision"] = cfg.precision;
  c["timeout_ms"] = cfg.timeout_ms;
  c["acc_threshold"] = cfg.thresholds.accuracy;
  c["struct_threshold"] = cfg.thresholds.structure;
  c["k"] = cfg.k;
  c["temperature"] = cfg.temperature;
  c["mode"] = to_string(cfg.mode);
  m["config"] = std::move(c);
  if (cfg.command == "metrics" || cfg.command == "exec" || cfg.command == "robustness") {
    // these columns have no published definition; say which one was used
    nlohmann::ordered_json defs;
    defs["pairwise_sim"] = "fraction of unordered candidate pairs with equal structure keys";
    if (cfg.command == "exec") {
      defs["high_acc_low_struct"] = "exec_acc >= acc_threshold and correct-subset majority <= struct_threshold";
    }
    m["substitute_definitions"] = std::move(defs);
  }
  nlohmann::ordered_json inputs;
  inputs["records"] = cfg.records.string();
  inputs["dataset"] = cfg.dataset.string();
  m["inputs"] = std::move(inputs);
  return m;
}

void write_manifest(const fs::path& out, nlohmann::ordered_json manifest) {
  write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
}

/// Distinct values in first-seen order.
template <typename T, typename Key>
std::vector<std::string> first_seen(const std::vector<T>& items, Key key) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(key(item)).second) out.push_back(key(item));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

int run_canonicalize(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  std::string text;
  if (cfg.input.empty() || cfg.input == "-") {
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) {
      err << "error: cannot read standard input\n";
      return kExitUsage;
    }
  } else {
    try {
      text = read_file(cfg.input);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  int code = kExitOk;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        std::string_view(text).substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto key = canonical_key(line);
    if (const auto* k = std::get_if<StructureKey>(&key)) {
      if (cfg.digest) out << k->digest << '\t';
      out << k->key << '\n';
    } else {
      const auto& f = std::get<ParseFailure>(key);
      out << "PARSE_FAIL\t" << to_string(f.reason) << '\n';
      code = kExitPartial;
    }
  }
  return code;
}

int run_metrics(const RunConfig& cfg, std::ostream& err) {
  require_file(cfg.records, "--records");
  if (!cfg.dataset.empty()) require_dir(cfg.dataset, "--dataset");
  prepare_out(cfg.out);

  const GenerationFile file = load_generations(cfg.records);
  std::vector<std::string> warnings;
  if (!cfg.dataset.empty()) {
    const SpiderDataset ds = load_spider(cfg.dataset);
    for (const auto& s : file.sets) {
      if (ds.catalog(s.db_id) == nullptr) warnings.push_back("question " + s.question_id + ": unknown db_id " + s.db_id);
    }
  }

  const auto records = parallel_map<MetricRecord>(file.sets.size(), cfg.workers, [&](std::size_t i) {
    return evaluate_structure(file.sets[i]);
  });

  std::vector<MetricSummary> summaries;
  for (const auto& model : first_seen(records, [](const MetricRecord& r) { return r.model; })) {
    std::vector<MetricRecord> subset;
    for (const auto& r : records) {
      if (r.model == model) subset.push_back(r);
    }
    summaries.push_back(summarize_metrics(model, subset));
  }

  std::size_t flagged = 0;
  std::size_t excluded = 0;
  for (const auto& r : records) {
    if (!r.gold_parse_ok) {
      ++flagged;
      warnings.push_back("question " + r.question_id + " (" + r.model + "): gold query does not parse");
    }
    if (r.m == 0) ++excluded;
  }

  write_report<MetricRecord>(records, cfg.out / ("metrics_questions" + ext(cfg.format)), cfg.format, cfg.precision);
  write_report<MetricSummary>(summaries, cfg.out / "table1.csv", ReportFormat::Csv, cfg.precision);

  auto manifest = base_manifest(cfg);
  manifest["counts"] = {{"questions", records.size()}, {"excluded_no_parse", excluded}, {"gold_unparseable", flagged}};
  manifest["warnings"] = warnings;
  write_manifest(cfg.out, std::move(manifest));
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return warnings.empty() ? kExitOk : kExitPartial;
}

int run_exec(const RunConfig& cfg, std::ostream& err) {
  require_file(cfg.records, "--records");
  require_dir(cfg.dataset, "--dataset");
  prepare_out(cfg.out);

  const GenerationFile file = load_generations(cfg.records);
  const SpiderDataset ds = load_spider(cfg.dataset);
  ExecOptions options;
  options.limits.timeout = std::chrono::milliseconds(cfg.timeout_ms);

  const auto summaries = parallel_map<ExecSummary>(file.sets.size(), cfg.workers, [&](std::size_t i) {
    const GenerationSet& set = file.sets[i];
    ExecSummary s;
    s.question_id = set.question_id;
    s.db_id = set.db_id;
    s.model = set.provenance.model;
    s.n = set.candidates.size();
    const auto db = ds.database(set.db_id);
    if (!db) {
      s.excluded = true;
      s.error = "database not found: " + set.db_id;
      return s;
    }
    try {
      return summarize_report(evaluate_generation_set(set, *db, options), cfg.thresholds);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GoldExecutionFailed) throw;
      s.excluded = true;
      s.error = e.what();
      return s;
    }
  });

  std::vector<ExecAggregate> aggregates;
  for (const auto& model : first_seen(summaries, [](const ExecSummary& s) { return s.model; })) {
    std::vector<ExecSummary> subset;
    for (const auto& s : summaries) {
      if (s.model == model) subset.push_back(s);
    }
    aggregates.push_back(aggregate_exec(model, subset));
  }

  std::vector<std::string> warnings = ds.warnings;
  std::size_t excluded = 0;
  for (const auto& s : summaries) {
    if (!s.excluded) continue;
    ++excluded;
    warnings.push_back("question " + s.question_id + " (" + s.model + ") excluded: " + s.error);
  }

  write_report<ExecSummary>(summaries, cfg.out / ("exec_questions" + ext(cfg.format)), cfg.format, cfg.precision);
  write_report<ExecAggregate>(aggregates, cfg.out / "table2.csv", ReportFormat::Csv, cfg.precision);

  auto manifest = base_manifest(cfg);
  manifest["counts"] = {{"questions", summaries.size()}, {"excluded", excluded}};
  manifest["warnings"] = warnings;
  write_manifest(cfg.out, std::move(manifest));
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return excluded == 0 ? kExitOk : kExitPartial;
}

int run_robustness(const RunConfig& cfg, std::ostream& err) {
  require_file(cfg.records, "--records");
  prepare_out(cfg.out);

  const GenerationFile file = load_generations(cfg.records);
  if (file.families.empty()) throw Error(ErrorCode::NoData, "no variant families in " + cfg.records.string());

  const auto records = parallel_map<RobustnessRecord>(file.families.size(), cfg.workers, [&](std::size_t i) {
    return evaluate_family(file.families[i]);
  });

  std::vector<RobustnessSummary> summaries;
  auto group_key = [](const RobustnessRecord& r) { return r.model + '\x1f' + std::string(to_string(r.kind)); };
  for (const auto& key : first_seen(records, group_key)) {
    std::vector<RobustnessRecord> subset;
    for (const auto& r : records) {
      if (group_key(r) == key) subset.push_back(r);
    }
    summaries.push_back(summarize_robustness(subset.front().model, subset.front().kind, subset));
  }

  std::vector<std::string> warnings;
  for (const auto& r : records) {
    if (r.excluded) warnings.push_back("family " + r.family_id + " (" + r.model + ") excluded: undefined majority");
  }

  write_report<RobustnessRecord>(records, cfg.out / ("robustness_families" + ext(cfg.format)), cfg.format,
                                 cfg.precision);
  write_report<RobustnessSummary>(summaries, cfg.out / "robustness.csv", ReportFormat::Csv, cfg.precision);

  auto manifest = base_manifest(cfg);
  manifest["counts"] = {{"families", records.size()}, {"excluded", warnings.size()}};
  manifest["warnings"] = warnings;
  write_manifest(cfg.out, std::move(manifest));
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return warnings.empty() ? kExitOk : kExitPartial;
}

int run_compile(const RunConfig& cfg, std::ostream& err) {
  require_file(cfg.records, "--records");
  if (!cfg.dataset.empty()) require_dir(cfg.dataset, "--dataset");
  prepare_out(cfg.out);

  std::optional<SpiderDataset> ds;
  if (!cfg.dataset.empty()) ds = load_spider(cfg.dataset);

  // Each input line is a generation entry (every sample becomes one record),
  // a raw IR output {"question_id", "raw", ["db_id"]}, or an already
  // evaluated pipeline record carrying its flags.
  struct Job {
    std::string question_id;
    std::string raw;
    std::string db_id;
    std::optional<PipelineRecord> recorded;
  };
  std::vector<Job> jobs;
  const std::string text = read_file(cfg.records);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      if (j.contains("samples")) {
        const GenerationEntry e = generation_entry_from_json(j);
        for (std::size_t i = 0; i < e.samples.size(); ++i) {
          jobs.push_back({e.question_id + "#" + std::to_string(i), e.samples[i], e.db_id, std::nullopt});
        }
      } else if (j.contains("json_valid")) {
        PipelineRecord r = j.get<PipelineRecord>();
        if (!flags_consistent(r)) throw Error(ErrorCode::InvalidInput, "inconsistent flags");
        jobs.push_back({r.question_id, r.raw_text, j.value("db_id", std::string()), std::move(r)});
      } else {
        jobs.push_back({j.at("question_id").get<std::string>(), j.at("raw").get<std::string>(),
                        j.value("db_id", std::string()), std::nullopt});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidInput, where + e.what());
    }
  }

  const auto records = parallel_map<PipelineRecord>(jobs.size(), cfg.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    if (job.recorded) return *job.recorded;
    std::optional<Database> db;
    if (ds && !job.db_id.empty()) {
      if (const auto path = ds->database(job.db_id)) db = Database::open_read_only(*path);
    }
    return evaluate_pipeline_output(job.question_id, job.raw, db ? &*db : nullptr);
  });

  std::string sql_file;
  for (const auto& r : records) {
    if (r.compilable) {
      sql_file += r.sql + ";\n";
    } else {
      sql_file += "-- " + r.question_id + ": " + r.error + "\n";
    }
  }
  write_file_atomic(cfg.out / "compiled.sql", sql_file);
  write_report<PipelineRecord>(records, cfg.out / ("pipeline_records" + ext(cfg.format)), cfg.format, cfg.precision);
  const PipelineRates rates = pipeline_metrics(records);
  write_report<PipelineRates>(std::span<const PipelineRates>(&rates, 1), cfg.out / "table3.csv", ReportFormat::Csv,
                              cfg.precision);

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.end_to_end ? 0 : 1;
  auto manifest = base_manifest(cfg);
  manifest["counts"] = {{"records", records.size()}, {"not_end_to_end", failed}};
  write_manifest(cfg.out, std::move(manifest));
  if (failed > 0) err << "warning: " << failed << " of " << records.size() << " records did not succeed end to end\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

int run_generate(const RunConfig& cfg, std::ostream& err) {
  require_dir(cfg.dataset, "--dataset");
  require_file(cfg.provider, "--provider");
  prepare_out(cfg.out);
  if (cfg.k == 0) throw UsageError("--k must be at least 1");

  const SpiderDataset ds = load_spider(cfg.dataset);
  const ProviderConfig provider = load_provider_config(cfg.provider);
  const PromptTemplate tmpl = prompt_template(cfg.mode);
  RateLimiter limiter(provider.requests_per_minute);

  struct Job {
    const SpiderQuestion* question;
    std::optional<std::size_t> variant;  // schema shuffle index, 1-based
  };
  std::vector<Job> jobs;
  const std::size_t n = cfg.limit ? std::min(*cfg.limit, ds.questions.size()) : ds.questions.size();
  for (std::size_t i = 0; i < n; ++i) {
    jobs.push_back({&ds.questions[i], std::nullopt});
    for (std::size_t t = 1; t <= cfg.schema_variants; ++t) jobs.push_back({&ds.questions[i], t});
  }

  struct Outcome {
    std::optional<GenerationEntry> entry;
    std::string error;
  };
  // questions run one at a time; the k samples of each fan out inside the provider call
  const auto outcomes = parallel_map<Outcome>(jobs.size(), 1, [&](std::size_t i) {
    const Job& job = jobs[i];
    const SpiderQuestion& q = *job.question;
    Outcome o;
    const SchemaCatalog* catalog = ds.catalog(q.db_id);
    if (catalog == nullptr) {
      o.error = "question " + q.question_id + ": unknown db_id " + q.db_id;
      return o;
    }
    SchemaCatalog shown = *catalog;
    GenerationEntry e;
    e.question_id = q.question_id;
    if (job.variant) {
      shown = shuffle_schema(*catalog, cfg.seed + *job.variant);
      e.question_id = q.question_id + "#s" + std::to_string(*job.variant);
      e.variant_of = q.question_id;
      e.perturbation_kind = PerturbationKind::SchemaPresentation;
    }
    const std::string prompt = render_prompt(tmpl, q.db_id, q.question, shown);
    try {
      SampleBatch batch = sample_generations(provider, prompt, cfg.k, cfg.temperature, &limiter);
      e.db_id = q.db_id;
      e.question = q.question;
      e.gold_sql = q.gold_sql;
      e.model = provider.model;
      e.temperature = cfg.temperature;
      e.k = cfg.k;
      e.mode = cfg.mode;
      e.samples = std::move(batch.outputs);
      e.sample_meta = nlohmann::json::array();
      for (const auto& m : batch.meta) e.sample_meta.push_back(to_json(m));
      o.entry = std::move(e);
    } catch (const Error& err_) {
      if (err_.code() == ErrorCode::Auth) throw;
      o.error = "question " + e.question_id + ": " + err_.what();
    }
    return o;
  });

  std::vector<GenerationEntry> entries;
  std::vector<std::string> errors;
  std::set<std::string> failed_bases;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].entry) continue;
    errors.push_back(outcomes[i].error);
    if (!jobs[i].variant) failed_bases.insert(jobs[i].question->question_id);
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].entry) continue;
    // a variant whose base failed would dangle
    if (jobs[i].variant && failed_bases.count(jobs[i].question->question_id)) continue;
    entries.push_back(*outcomes[i].entry);
  }
  write_generations(entries, cfg.out / "generations.jsonl");

  auto manifest = base_manifest(cfg);
  manifest["provider"] = {{"endpoint", provider.endpoint}, {"model", provider.model}, {"token_env", provider.token_env}};
  manifest["counts"] = {{"entries", entries.size()}, {"failed", errors.size()}};
  manifest["warnings"] = errors;
  write_manifest(cfg.out, std::move(manifest));
  for (const auto& e : errors) err << "error: " << e << "\n";
  return errors.empty() ? kExitOk : kExitPartial;
}

int run_command(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "canonicalize") return run_canonicalize(cfg, in, out, err);
    if (cfg.command == "metrics") return run_metrics(cfg, err);
    if (cfg.command == "exec") return run_exec(cfg, err);
    if (cfg.command == "robustness") return run_robustness(cfg, err);
    if (cfg.command == "compile") return run_compile(cfg, err);
    if (cfg.command == "generate") return run_generate(cfg, err);
    err << "error: unknown command " << cfg.command << "\n";
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitUsage;
}

}  // namespace sqlstruct

#include <CLI11.hpp>

#include <iostream>

#include "sqlstruct/cli.hpp"
#include "sqlstruct/error.hpp"

using sqlstruct::RunConfig;

namespace {

void add_common(CLI::App* sub, RunConfig& cfg, std::string& format) {
  sub->add_option("--out", cfg.out, "output directory");
  sub->add_option("--format", format, "per-item report format")->check(CLI::IsMember({"jsonl", "csv"}));
  sub->add_option("--seed", cfg.seed, "recorded in the manifest; drives schema shuffles");
  sub->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--precision", cfg.precision, "decimals in CSV tables")->check(CLI::Range(0, 17));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural reliability metrics for generated SQL"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string format = "jsonl";
  std::string mode = "direct";

  auto* canon = app.add_subcommand("canonicalize", "print the structure key of each input line");
  canon->add_option("input", cfg.input, "SQL file, one query per line (default stdin)");
  canon->add_flag("--digest", cfg.digest, "prefix each key with its 64-bit digest");

  auto* metrics = app.add_subcommand("metrics", "structural statistics per question");
  metrics->add_option("--records", cfg.records, "generation records JSONL")->required();
  metrics->add_option("--dataset", cfg.dataset, "Spider directory, for db_id checks");
  add_common(metrics, cfg, format);

  auto* exec = app.add_subcommand("exec", "execution accuracy against structure");
  exec->add_option("--records", cfg.records, "generation records JSONL")->required();
  exec->add_option("--dataset", cfg.dataset, "Spider directory with database/")->required();
  exec->add_option("--timeout-ms", cfg.timeout_ms, "per-query time limit")->check(CLI::PositiveNumber);
  exec->add_option("--acc-threshold", cfg.thresholds.accuracy, "High-Acc Low-Struct accuracy bound")
      ->check(CLI::Range(0.0, 1.0));
  exec->add_option("--struct-threshold", cfg.thresholds.structure, "High-Acc Low-Struct majority bound")
      ->check(CLI::Range(0.0, 1.0));
  add_common(exec, cfg, format);

  auto* robust = app.add_subcommand("robustness", "cross-variant agreement and sensitivity");
  robust->add_option("--records", cfg.records, "generation records JSONL with variant families")->required();
  add_common(robust, cfg, format);

  auto* compile = app.add_subcommand("compile", "compile JSON query IR and report validity rates");
  compile->add_option("--records", cfg.records, "IR outputs JSONL")->required();
  compile->add_option("--dataset", cfg.dataset, "Spider directory; enables execution checks");
  add_common(compile, cfg, format);

  auto* generate = app.add_subcommand("generate", "sample generations from a chat-completion endpoint");
  generate->add_option("--dataset", cfg.dataset, "Spider directory")->required();
  generate->add_option("--provider", cfg.provider, "provider config JSON")->required();
  generate->add_option("--mode", mode, "prompt style")->check(CLI::IsMember({"direct", "compile"}));
  generate->add_option("--k", cfg.k, "samples per question")->check(CLI::PositiveNumber);
  generate->add_option("--temperature", cfg.temperature, "sampling temperature");
  generate->add_option("--limit", cfg.limit, "only the first N questions");
  generate->add_option("--schema-variants", cfg.schema_variants, "shuffled-schema variants per question");
  add_common(generate, cfg, format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sqlstruct::kExitUsage;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  cfg.format = sqlstruct::parse_report_format(format);
  cfg.mode = sqlstruct::parse_generation_mode(mode);
  return sqlstruct::run_command(cfg, std::cin, std::cout, std::cerr);
}

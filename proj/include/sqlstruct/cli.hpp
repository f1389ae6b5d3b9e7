#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sqlstruct/execution.hpp"
#include "sqlstruct/ingest.hpp"
#include "sqlstruct/report.hpp"

namespace sqlstruct {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string command;
  std::filesystem::path dataset;
  std::filesystem::path records;
  std::filesystem::path out;     // output directory (canonicalize: optional file)
  std::filesystem::path input;   // canonicalize input, "-" for stdin
  std::filesystem::path provider;
  ReportFormat format = ReportFormat::Jsonl;
  std::size_t k = 10;
  double temperature = 1.0;
  long timeout_ms = 30000;
  Thresholds thresholds;
  unsigned long long seed = 0;
  std::size_t workers = 1;
  GenerationMode mode = GenerationMode::Direct;
  int precision = 4;
  bool digest = false;
  std::optional<std::size_t> limit;    // generate: first N questions
  std::size_t schema_variants = 0;     // generate: shuffled-schema variants per question
};

/// Runs fn(0..count-1) on up to `workers` threads and returns results by
/// index. The exception of the lowest failing index is rethrown.
template <typename T>
std::vector<T> parallel_map(std::size_t count, std::size_t workers, const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, count));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

int run_canonicalize(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err);
int run_metrics(const RunConfig& cfg, std::ostream& err);
int run_exec(const RunConfig& cfg, std::ostream& err);
int run_robustness(const RunConfig& cfg, std::ostream& err);
int run_compile(const RunConfig& cfg, std::ostream& err);
int run_generate(const RunConfig& cfg, std::ostream& err);

/// Dispatches on cfg.command, mapping library errors to exit codes.
int run_command(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace sqlstruct

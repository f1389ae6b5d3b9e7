#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlstruct/ingest.hpp"
#include "sqlstruct/schema.hpp"

namespace sqlstruct {

struct PromptTemplate {
  GenerationMode mode = GenerationMode::Direct;
  std::string text;  // placeholders {db_id}, {schema_json}, {question}
};

PromptTemplate direct_sql_template();
PromptTemplate compile_style_template();
PromptTemplate prompt_template(GenerationMode mode);

/// Substitutes the three placeholders; the schema is pretty-printed in the
/// {"tables", "foreign_keys"} shape. Throws Error(InvalidInput) when a
/// placeholder is missing or repeated in the template.
std::string render_prompt(const PromptTemplate& t, std::string_view db_id, std::string_view question,
                          const SchemaCatalog& schema);

enum class ProviderAdapter { OpenAiChat, AnthropicMessages };

struct ProviderConfig {
  std::string endpoint;   // full URL of the chat endpoint
  std::string model;
  std::string token_env;  // name of the environment variable holding the token; empty for none
  std::chrono::milliseconds timeout{60000};
  int max_retries = 5;
  double requests_per_minute = 60.0;
  std::size_t concurrency = 4;
  std::chrono::milliseconds backoff_base{500};
  ProviderAdapter adapter = ProviderAdapter::OpenAiChat;
  bool batched = false;  // ask for all k completions in one request ("n")
  int max_tokens = 1024;
};

/// Reads a provider config JSON file. Unknown keys are rejected; the token
/// itself is never part of the file.
ProviderConfig load_provider_config(const std::filesystem::path& path);
ProviderConfig provider_config_from_json(const nlohmann::json& j);

struct SampleMeta {
  std::size_t index = 0;
  int attempts = 0;
  int retries = 0;
  int http_status = 0;
  std::string response_id;
  std::string finish_reason;

  bool operator==(const SampleMeta&) const = default;
};

nlohmann::json to_json(const SampleMeta& meta);

struct SampleBatch {
  std::vector<std::string> outputs;
  std::vector<SampleMeta> meta;
};

/// Token bucket refilled at `per_minute` tokens per minute, burst 1.
class RateLimiter {
 public:
  explicit RateLimiter(double per_minute);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  Clock::duration interval_;
  Clock::time_point next_;
};

/// Draws exactly k outputs. Retries 429, 5xx and transport failures with
/// exponential backoff; 401/403 throw Error(Auth); exhausting retries or any
/// other failure throws Error(Provider) and no partial batch is returned.
SampleBatch sample_generations(const ProviderConfig& cfg, std::string_view prompt, std::size_t k, double temperature,
                               RateLimiter* limiter = nullptr);

}  // namespace sqlstruct

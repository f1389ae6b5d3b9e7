#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "sqlstruct/generation.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <optional>
#include <thread>

#include "sqlstruct/error.hpp"

namespace sqlstruct {

PromptTemplate direct_sql_template() {
  return {GenerationMode::Direct,
          "You are an expert SQL generator.\n"
          "Use SQLite dialect.\n"
          "Only output ONE SQL query, no explanation.\n"
          "\n"
          "Database ID: {db_id}\n"
          "\n"
          "Database schema (JSON):\n"
          "{schema_json}\n"
          "\n"
          "Question:\n"
          "{question}\n"
          "\n"
          "SQL:\n"};
}

PromptTemplate compile_style_template() {
  return {GenerationMode::Compile,
          "You are an expert Text-to-SQL system for the Spider benchmark.\n"
          "Your task is to write a structured JSON representation of a SQL query\n"
          "for the given question and database schema.\n"
          "\n"
          "Requirements:\n"
          "\n"
          "- Use ONLY tables and columns that exist in the provided schema.\n"
          "- Assume the database uses the SQLite dialect.\n"
          "- You MUST output a single JSON object, and nothing else (no explanations).\n"
          "- The JSON must describe the logical structure of the SQL query with the following fields:\n"
          "  - type: \"query\"\n"
          "  - query: {\n"
          "    select: [ ... ],\n"
          "    from: { ... },\n"
          "    joins: [ ... ],\n"
          "    where: [ ... ],\n"
          "    group_by: [ ... ],\n"
          "    having: [ ... ],\n"
          "    order_by: [ ... ],\n"
          "    limit: ...,\n"
          "    distinct: ...\n"
          "  }\n"
          "- Do NOT include any natural language text in the JSON.\n"
          "\n"
          "Database ID: {db_id}\n"
          "\n"
          "Database schema (JSON):\n"
          "{schema_json}\n"
          "\n"
          "Question:\n"
          "{question}\n"
          "\n"
          "Now output ONLY the JSON object for the query structure:\n"};
}

PromptTemplate prompt_template(GenerationMode mode) {
  return mode == GenerationMode::Direct ? direct_sql_template() : compile_style_template();
}

std::string render_prompt(const PromptTemplate& t, std::string_view db_id, std::string_view question,
                          const SchemaCatalog& schema) {
  const std::string schema_json = schema_to_json(schema).dump(2);
  const std::pair<std::string_view, std::string_view> subs[] = {
      {"{db_id}", db_id}, {"{schema_json}", schema_json}, {"{question}", question}};

  // Locate every placeholder in the template first so substituted text is never rescanned.
  std::vector<std::pair<std::size_t, std::size_t>> hits;  // (position, substitution index)
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    const auto first = t.text.find(subs[i].first);
    if (first == std::string::npos) {
      throw Error(ErrorCode::InvalidInput, "template lacks placeholder " + std::string(subs[i].first));
    }
    if (t.text.find(subs[i].first, first + 1) != std::string::npos) {
      throw Error(ErrorCode::InvalidInput, "template repeats placeholder " + std::string(subs[i].first));
    }
    hits.emplace_back(first, i);
  }
  std::sort(hits.begin(), hits.end());
  std::string out;
  std::size_t pos = 0;
  for (const auto& [at, i] : hits) {
    out.append(t.text, pos, at - pos);
    out += subs[i].second;
    pos = at + subs[i].first.size();
  }
  out.append(t.text, pos, std::string::npos);
  return out;
}

ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "provider config must be a JSON object");
  static const char* kKeys[] = {"endpoint",    "model",   "token_env",   "timeout_ms", "max_retries",
                                "rpm",         "concurrency", "backoff_ms", "adapter",   "batched",
                                "max_tokens"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) == std::end(kKeys)) {
      throw Error(ErrorCode::InvalidInput, "unknown provider config key " + key);
    }
  }
  ProviderConfig c;
  try {
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.token_env = j.value("token_env", std::string());
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    c.max_retries = j.value("max_retries", 5);
    c.requests_per_minute = j.value("rpm", 60.0);
    c.concurrency = j.value("concurrency", std::size_t{4});
    c.backoff_base = std::chrono::milliseconds(j.value("backoff_ms", 500));
    c.batched = j.value("batched", false);
    c.max_tokens = j.value("max_tokens", 1024);
    const std::string adapter = j.value("adapter", std::string("openai"));
    if (adapter == "openai") {
      c.adapter = ProviderAdapter::OpenAiChat;
    } else if (adapter == "anthropic") {
      c.adapter = ProviderAdapter::AnthropicMessages;
    } else {
      throw Error(ErrorCode::InvalidInput, "unknown adapter " + adapter);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("provider config: ") + e.what());
  }
  if (c.max_retries < 0 || c.concurrency == 0 || c.requests_per_minute <= 0.0) {
    throw Error(ErrorCode::InvalidInput, "provider config: retries, concurrency and rpm must be positive");
  }
  return c;
}

ProviderConfig load_provider_config(const std::filesystem::path& path) {
  try {
    return provider_config_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, "provider config " + path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const SampleMeta& m) {
  nlohmann::json j;
  j["index"] = m.index;
  j["attempts"] = m.attempts;
  j["retries"] = m.retries;
  j["http_status"] = m.http_status;
  j["response_id"] = m.response_id;
  j["finish_reason"] = m.finish_reason;
  return j;
}

RateLimiter::RateLimiter(double per_minute)
    : interval_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(60.0 / per_minute))),
      next_(Clock::now()) {}

void RateLimiter::acquire() {
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    if (next_ < now) next_ = now;
    slot = next_;
    next_ += interval_;
  }
  std::this_thread::sleep_until(slot);
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidInput, "endpoint is not a URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string read_token(const ProviderConfig& cfg) {
  if (cfg.token_env.empty()) return {};
  const char* value = std::getenv(cfg.token_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(ErrorCode::Auth, "environment variable " + cfg.token_env + " is not set");
  }
  return value;
}

nlohmann::json request_body(const ProviderConfig& cfg, std::string_view prompt, double temperature, std::size_t n) {
  nlohmann::json body;
  body["model"] = cfg.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
  body["temperature"] = temperature;
  if (cfg.adapter == ProviderAdapter::AnthropicMessages) {
    body["max_tokens"] = cfg.max_tokens;
  } else if (n > 1) {
    body["n"] = n;
  }
  return body;
}

struct Completion {
  std::string text;
  std::string finish_reason;
};

std::vector<Completion> parse_completions(const ProviderConfig& cfg, const nlohmann::json& j) {
  std::vector<Completion> out;
  if (cfg.adapter == ProviderAdapter::AnthropicMessages) {
    Completion c;
    for (const auto& part : j.at("content")) {
      if (part.value("type", "") == "text") c.text += part.at("text").get<std::string>();
    }
    c.finish_reason = j.value("stop_reason", "");
    out.push_back(std::move(c));
    return out;
  }
  for (const auto& choice : j.at("choices")) {
    Completion c;
    const auto& content = choice.at("message").at("content");
    c.text = content.is_null() ? std::string() : content.get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      c.finish_reason = choice["finish_reason"].get<std::string>();
    }
    out.push_back(std::move(c));
  }
  return out;
}

struct CallResult {
  std::vector<Completion> completions;
  SampleMeta meta;
};

CallResult call_with_retries(const ProviderConfig& cfg, const std::string& token, std::string_view prompt,
                             double temperature, std::size_t n, RateLimiter* limiter) {
  const Endpoint ep = split_url(cfg.endpoint);
  httplib::Client client(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!token.empty()) {
    if (cfg.adapter == ProviderAdapter::AnthropicMessages) {
      headers.emplace("x-api-key", token);
    } else {
      headers.emplace("Authorization", "Bearer " + token);
    }
  }
  if (cfg.adapter == ProviderAdapter::AnthropicMessages) headers.emplace("anthropic-version", "2023-06-01");
  const std::string body = request_body(cfg, prompt, temperature, n).dump();

  CallResult result;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto delay = cfg.backoff_base * (1LL << std::min(attempt - 1, 10));
      std::this_thread::sleep_for(delay);
    }
    if (limiter != nullptr) limiter->acquire();
    result.meta.attempts = attempt + 1;
    result.meta.retries = attempt;
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    result.meta.http_status = res->status;
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::Auth, "provider rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::Provider, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      result.completions = parse_completions(cfg, j);
      if (j.contains("id") && j["id"].is_string()) result.meta.response_id = j["id"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Provider, std::string("malformed provider response: ") + e.what());
    }
    if (result.completions.size() != n) {
      throw Error(ErrorCode::Provider, "provider returned " + std::to_string(result.completions.size()) +
                                           " completions, expected " + std::to_string(n));
    }
    return result;
  }
  throw Error(ErrorCode::Provider, "retries exhausted after " + std::to_string(cfg.max_retries + 1) +
                                       " attempts: " + last_error);
}

}  // namespace

SampleBatch sample_generations(const ProviderConfig& cfg, std::string_view prompt, std::size_t k, double temperature,
                               RateLimiter* limiter) {
  if (k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  const std::string token = read_token(cfg);
  SampleBatch batch;

  if (cfg.batched && cfg.adapter == ProviderAdapter::OpenAiChat) {
    auto call = call_with_retries(cfg, token, prompt, temperature, k, limiter);
    for (std::size_t i = 0; i < k; ++i) {
      SampleMeta meta = call.meta;
      meta.index = i;
      meta.finish_reason = call.completions[i].finish_reason;
      batch.outputs.push_back(std::move(call.completions[i].text));
      batch.meta.push_back(std::move(meta));
    }
    return batch;
  }

  std::vector<std::optional<CallResult>> results(k);
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::optional<Error> first_error;
  auto worker = [&] {
    for (;;) {
      {
        std::lock_guard lock(error_mu);
        if (first_error) return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= k) return;
      try {
        results[i] = call_with_retries(cfg, token, prompt, temperature, 1, limiter);
      } catch (const Error& e) {
        std::lock_guard lock(error_mu);
        // auth failures win over provider errors so callers can stop the run
        if (!first_error || (e.code() == ErrorCode::Auth && first_error->code() != ErrorCode::Auth)) first_error = e;
      }
    }
  };
  const std::size_t threads = std::min(cfg.concurrency, k);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) throw *first_error;

  for (std::size_t i = 0; i < k; ++i) {
    auto& r = *results[i];
    r.meta.index = i;
    r.meta.finish_reason = r.completions.front().finish_reason;
    batch.outputs.push_back(std::move(r.completions.front().text));
    batch.meta.push_back(std::move(r.meta));
  }
  return batch;
}

}  // namespace sqlstruct

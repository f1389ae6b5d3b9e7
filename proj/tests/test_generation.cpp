#include <cstdlib>

#include <gtest/gtest.h>

#include "sqlstruct/error.hpp"
#include "sqlstruct/generation.hpp"
#include "support/stub_server.hpp"
#include "support/testing.hpp"

using namespace sqlstruct;
namespace st = sqlstruct::testing;
using Reply = st::StubServer::Reply;

namespace {

SchemaCatalog tiny_schema() {
  SchemaCatalog c;
  c.db_id = "concert_singer";
  c.tables = {{"stadium", {"Stadium_ID", "Name"}}, {"concert", {"concert_ID", "Stadium_ID"}}};
  c.foreign_keys = {{"concert", "Stadium_ID", "stadium", "Stadium_ID"}};
  return c;
}

ProviderConfig stub_config(const st::StubServer& server) {
  ProviderConfig cfg;
  cfg.endpoint = server.url();
  cfg.model = "stub-model";
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.max_retries = 3;
  cfg.timeout = std::chrono::milliseconds(5000);
  return cfg;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidInput;
}

constexpr const char* kTokenEnv = "SQLSTRUCT_TEST_TOKEN";
constexpr const char* kToken = "sk-test-secret-0123456789";

}  // namespace

TEST(Prompt, TemplatesHaveEachPlaceholderOnce) {
  for (const auto& t : {direct_sql_template(), compile_style_template()}) {
    for (const char* p : {"{db_id}", "{schema_json}", "{question}"}) {
      const auto first = t.text.find(p);
      ASSERT_NE(first, std::string::npos) << p;
      EXPECT_EQ(t.text.find(p, first + 1), std::string::npos) << p;
    }
  }
  EXPECT_EQ(prompt_template(GenerationMode::Compile).mode, GenerationMode::Compile);
}

TEST(Prompt, RendersSchemaAndQuestion) {
  const auto text = render_prompt(direct_sql_template(), "concert_singer", "How many {db_id} rows?", tiny_schema());
  EXPECT_EQ(text.find("{schema_json}"), std::string::npos);
  EXPECT_NE(text.find("How many {db_id} rows?"), std::string::npos);  // substituted text is not rescanned
  EXPECT_NE(text.find(schema_to_json(tiny_schema()).dump(2)), std::string::npos);
  EXPECT_NE(text.find("concert_singer"), std::string::npos);
}

TEST(Prompt, MalformedTemplate) {
  PromptTemplate t{GenerationMode::Direct, "{db_id} {question}"};
  EXPECT_EQ(code_of([&] { render_prompt(t, "d", "q", tiny_schema()); }), ErrorCode::InvalidInput);
  t.text = "{db_id} {schema_json} {question} {question}";
  EXPECT_EQ(code_of([&] { render_prompt(t, "d", "q", tiny_schema()); }), ErrorCode::InvalidInput);
}

TEST(Schema, ShuffleIsDeterministicPermutation) {
  const auto a = shuffle_schema(tiny_schema(), 42);
  EXPECT_EQ(a, shuffle_schema(tiny_schema(), 42));
  ASSERT_EQ(a.tables.size(), 2u);
  for (const auto& t : a.tables) {
    auto sorted = t.columns;
    std::sort(sorted.begin(), sorted.end());
    bool found = false;
    for (const auto& orig : tiny_schema().tables) {
      auto o = orig.columns;
      std::sort(o.begin(), o.end());
      if (orig.table_name == t.table_name && o == sorted) found = true;
    }
    EXPECT_TRUE(found) << t.table_name;
  }
  EXPECT_EQ(a.foreign_keys.size(), 1u);
}

TEST(Config, ParsesAndRejectsUnknownKeys) {
  const auto cfg = provider_config_from_json(
      {{"endpoint", "http://x/v1"}, {"model", "m"}, {"token_env", "T"}, {"timeout_ms", 100}, {"adapter", "anthropic"},
       {"rpm", 30}, {"concurrency", 2}, {"batched", true}});
  EXPECT_EQ(cfg.adapter, ProviderAdapter::AnthropicMessages);
  EXPECT_EQ(cfg.timeout, std::chrono::milliseconds(100));
  EXPECT_EQ(cfg.concurrency, 2u);
  EXPECT_EQ(code_of([] { provider_config_from_json({{"endpoint", "http://x"}, {"model", "m"}, {"token", "oops"}}); }),
            ErrorCode::InvalidInput);
}

TEST(Sampling, RetriesRateLimitThenSucceeds) {
  st::StubServer server([](int n, const nlohmann::json&, const httplib::Request&) {
    if (n <= 2) return Reply{429, R"({"error": "slow down"})"};
    return Reply{200, st::StubServer::openai_body({"SELECT 1"}, "r3")};
  });
  const auto batch = sample_generations(stub_config(server), "prompt", 1, 0.5);
  ASSERT_EQ(batch.outputs.size(), 1u);
  EXPECT_EQ(batch.outputs[0], "SELECT 1");
  EXPECT_EQ(batch.meta[0].retries, 2);
  EXPECT_EQ(batch.meta[0].attempts, 3);
  EXPECT_EQ(batch.meta[0].http_status, 200);
  EXPECT_EQ(batch.meta[0].response_id, "r3");
  EXPECT_EQ(server.requests(), 3);
}

TEST(Sampling, PersistentServerErrorExhaustsRetries) {
  st::StubServer server([](int, const nlohmann::json&, const httplib::Request&) { return Reply{500, "{}"}; });
  EXPECT_EQ(code_of([&] { sample_generations(stub_config(server), "p", 1, 1.0); }), ErrorCode::Provider);
  EXPECT_EQ(server.requests(), 4);
}

TEST(Sampling, UnauthorizedIsFatal) {
  st::StubServer server([](int, const nlohmann::json&, const httplib::Request&) { return Reply{401, "{}"}; });
  EXPECT_EQ(code_of([&] { sample_generations(stub_config(server), "p", 1, 1.0); }), ErrorCode::Auth);
  EXPECT_EQ(server.requests(), 1);
}

TEST(Sampling, ClientErrorIsNotRetried) {
  st::StubServer server([](int, const nlohmann::json&, const httplib::Request&) { return Reply{400, "{}"}; });
  EXPECT_EQ(code_of([&] { sample_generations(stub_config(server), "p", 2, 1.0); }), ErrorCode::Provider);
  EXPECT_LE(server.requests(), 2);
}

TEST(Sampling, NoPartialBatches) {
  st::StubServer server([](int n, const nlohmann::json&, const httplib::Request&) {
    if (n == 3) return Reply{404, "{}"};
    return Reply{200, st::StubServer::openai_body({"x"})};
  });
  auto cfg = stub_config(server);
  cfg.concurrency = 1;
  EXPECT_EQ(code_of([&] { sample_generations(cfg, "p", 5, 1.0); }), ErrorCode::Provider);
}

TEST(Sampling, IndependentCallsFillK) {
  st::StubServer server([](int n, const nlohmann::json& body, const httplib::Request&) {
    EXPECT_FALSE(body.contains("n"));
    return Reply{200, st::StubServer::openai_body({"out" + std::to_string(n)})};
  });
  auto cfg = stub_config(server);
  cfg.concurrency = 3;
  const auto batch = sample_generations(cfg, "p", 7, 1.0);
  EXPECT_EQ(batch.outputs.size(), 7u);
  EXPECT_EQ(server.requests(), 7);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(batch.meta[i].index, i);
}

TEST(Sampling, BatchedRequestAsksForN) {
  st::StubServer server([](int, const nlohmann::json& body, const httplib::Request&) {
    EXPECT_EQ(body.value("n", 0), 3);
    EXPECT_DOUBLE_EQ(body.value("temperature", 0.0), 0.7);
    return Reply{200, st::StubServer::openai_body({"a", "b", "c"})};
  });
  auto cfg = stub_config(server);
  cfg.batched = true;
  const auto batch = sample_generations(cfg, "p", 3, 0.7);
  EXPECT_EQ(batch.outputs, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(server.requests(), 1);
}

TEST(Sampling, WrongCompletionCountIsAnError) {
  st::StubServer server([](int, const nlohmann::json&, const httplib::Request&) {
    return Reply{200, st::StubServer::openai_body({"a"})};
  });
  auto cfg = stub_config(server);
  cfg.batched = true;
  EXPECT_EQ(code_of([&] { sample_generations(cfg, "p", 2, 1.0); }), ErrorCode::Provider);
}

TEST(Sampling, BearerTokenFromEnvironment) {
  setenv(kTokenEnv, kToken, 1);
  st::StubServer server([](int, const nlohmann::json&, const httplib::Request& req) {
    if (req.get_header_value("Authorization") != std::string("Bearer ") + kToken) return Reply{401, "{}"};
    return Reply{200, st::StubServer::openai_body({"ok"})};
  });
  auto cfg = stub_config(server);
  cfg.token_env = kTokenEnv;
  const auto batch = sample_generations(cfg, "p", 1, 1.0);
  EXPECT_EQ(batch.outputs[0], "ok");
  // the token never shows up in metadata
  EXPECT_EQ(to_json(batch.meta[0]).dump().find(kToken), std::string::npos);
  unsetenv(kTokenEnv);
}

TEST(Sampling, MissingTokenIsAuthError) {
  unsetenv(kTokenEnv);
  ProviderConfig cfg;
  cfg.endpoint = "http://127.0.0.1:9/v1/chat";
  cfg.token_env = kTokenEnv;
  EXPECT_EQ(code_of([&] { sample_generations(cfg, "p", 1, 1.0); }), ErrorCode::Auth);
}

TEST(Sampling, AuthErrorsDoNotLeakTheToken) {
  setenv(kTokenEnv, kToken, 1);
  st::StubServer server([](int, const nlohmann::json&, const httplib::Request&) { return Reply{403, "{}"}; });
  auto cfg = stub_config(server);
  cfg.token_env = kTokenEnv;
  try {
    sample_generations(cfg, "p", 1, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).find(kToken), std::string::npos);
  }
  unsetenv(kTokenEnv);
}

TEST(Sampling, AnthropicAdapter) {
  setenv(kTokenEnv, kToken, 1);
  st::StubServer server([](int, const nlohmann::json& body, const httplib::Request& req) {
    EXPECT_EQ(req.get_header_value("x-api-key"), kToken);
    EXPECT_FALSE(req.get_header_value("anthropic-version").empty());
    EXPECT_TRUE(body.contains("max_tokens"));
    return Reply{200, R"({"id": "msg_1", "content": [{"type": "text", "text": "SELECT 2"}], "stop_reason": "end_turn"})"};
  });
  auto cfg = stub_config(server);
  cfg.adapter = ProviderAdapter::AnthropicMessages;
  cfg.token_env = kTokenEnv;
  const auto batch = sample_generations(cfg, "p", 2, 1.0);
  EXPECT_EQ(batch.outputs, (std::vector<std::string>{"SELECT 2", "SELECT 2"}));
  EXPECT_EQ(batch.meta[1].finish_reason, "end_turn");
  unsetenv(kTokenEnv);
}

TEST(Sampling, TransportFailureIsRetried) {
  ProviderConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/chat";  // nothing listens on port 1
  cfg.max_retries = 1;
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(500);
  EXPECT_EQ(code_of([&] { sample_generations(cfg, "p", 1, 1.0); }), ErrorCode::Provider);
}

TEST(RateLimit, SpacesRequests) {
  RateLimiter limiter(600.0);  // one per 100 ms
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 3; ++i) limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(190));
}

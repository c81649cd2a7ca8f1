// Copyright 2026 The StratSample Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stratsample/backend.h"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "test_util.h"

namespace stratsample {
namespace {

using nlohmann::json;

CompletionRequest user_request(const std::string& text,
                               std::optional<std::uint64_t> seed = {}) {
  CompletionRequest request;
  request.model = "m";
  request.messages = {{Role::kUser, text}};
  request.temperature = 1.0;
  request.seed = seed;
  return request;
}

CategoricalMockBackend lakes_backend() {
  CategoricalMockConfig config;
  config.default_table.entries = {{"Lake Erie", 0.9}, {"Lake Huron", 0.1}};
  config.rules.push_back(CategoricalRule{
      {"planet"}, {}, std::nullopt,
      CategoricalTable{{{"Mars", 0.25}, {"Venus", 0.25}, {"Jupiter", 0.5}}}});
  return CategoricalMockBackend(config);
}

TEST(Validate, RejectsMalformedRequests) {
  CompletionRequest request = user_request("hi");
  EXPECT_NO_THROW(validate(request));

  CompletionRequest empty = request;
  empty.messages.clear();
  EXPECT_THROW(validate(empty), InvalidArgument);

  CompletionRequest hot = request;
  hot.temperature = 2.5;
  EXPECT_THROW(validate(hot), InvalidArgument);

  CompletionRequest blank = request;
  blank.messages[0].content = "   ";
  EXPECT_THROW(validate(blank), InvalidArgument);

  CompletionRequest no_tokens = request;
  no_tokens.max_tokens = 0;
  EXPECT_THROW(validate(no_tokens), InvalidArgument);
}

TEST(ScriptedMock, ReturnsResponsesInOrderThenFails) {
  ScriptedMockBackend backend({"Texas", "Ohio"});
  EXPECT_EQ(backend.complete(user_request("a")).text, "Texas");
  EXPECT_EQ(backend.complete(user_request("b")).text, "Ohio");
  EXPECT_EQ(backend.calls(), 2u);
  EXPECT_EQ(backend.remaining(), 0u);
  try {
    backend.complete(user_request("c"));
    FAIL() << "expected exhaustion";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kScriptExhausted);
    EXPECT_FALSE(e.retryable());
  }
  ASSERT_EQ(backend.received().size(), 3u);
  EXPECT_EQ(backend.received()[1].messages[0].content, "b");
}

TEST(ScriptedMock, ScoringIsUnsupported) {
  ScriptedMockBackend backend({"x"});
  EXPECT_FALSE(backend.supports_scoring());
  try {
    backend.score_continuation("p", " x");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kScoringUnsupported);
  }
}

TEST(ScriptedMock, LoadsFixtureFile) {
  auto backend =
      ScriptedMockBackend::from_file(testing::fixture("scripted_us_states.json"));
  EXPECT_EQ(backend->remaining(), 9u);
}

TEST(CategoricalMock, SameSeedSameAnswer) {
  auto backend = lakes_backend();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    EXPECT_EQ(backend.complete(user_request("Name a lake", seed)).text,
              backend.complete(user_request("Name a lake", seed)).text);
  }
}

TEST(CategoricalMock, DrawFrequenciesFollowTable) {
  auto backend = lakes_backend();
  int erie = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    if (backend.complete(user_request("Name a lake", seed)).text == "Lake Erie")
      ++erie;
  }
  EXPECT_NEAR(erie / double(n), 0.9, 0.02);
}

TEST(CategoricalMock, FirstMatchingRuleWins) {
  auto backend = lakes_backend();
  EXPECT_EQ(backend.table_for("Name a planet").entries.size(), 3u);
  EXPECT_EQ(backend.table_for("Name a lake").entries.size(), 2u);
}

TEST(CategoricalMock, ResidualMassAnswersInvalid) {
  CategoricalMockConfig config;
  config.default_table.entries = {{"A", 0.2}};
  CategoricalMockBackend backend(config);
  int invalid = 0;
  for (int seed = 0; seed < 5000; ++seed) {
    const auto text = backend.complete(user_request("q", seed)).text;
    ASSERT_TRUE(text == "A" || text == "Invalid") << text;
    invalid += text == "Invalid";
  }
  EXPECT_NEAR(invalid / 5000.0, 0.8, 0.03);
}

TEST(CategoricalMock, ScoresAreLogTableProbabilities) {
  auto backend = lakes_backend();
  EXPECT_NEAR(backend.score_continuation("Name a planet", " Mars"),
              std::log(0.25), 1e-12);
  EXPECT_EQ(backend.score_continuation("Name a planet", ""), 0.0);
  EXPECT_NEAR(backend.score_continuation("Name a planet", " Pluto"),
              std::log(1e-9), 1e-12);
}

TEST(CategoricalMock, ScoredMassNeverExceedsOne) {
  auto backend = lakes_backend();
  for (const std::string prompt : {"Name a planet", "Name a lake"}) {
    double total = 0.0;
    for (const auto& [answer, p] : backend.table_for(prompt).entries) {
      total += std::exp(backend.score_continuation(prompt, " " + answer));
    }
    EXPECT_LE(total, 1.0 + 1e-12);
  }
}

TEST(CategoricalMock, RejectsOverfullTable) {
  CategoricalMockConfig config;
  config.default_table.entries = {{"A", 0.7}, {"B", 0.7}};
  EXPECT_THROW(CategoricalMockBackend{config}, InvalidArgument);
}

TEST(CategoricalMock, LoadsFixtureFile) {
  auto backend =
      CategoricalMockBackend::from_file(testing::fixture("mock_pipeline.json"));
  EXPECT_EQ(backend->config().seed, 7u);
  EXPECT_FALSE(backend->config().rules.empty());
}

TEST(SumLogprobs, AddsTokenLogprobs) {
  const std::vector<TokenLogprob> tokens{{"a", std::log(0.5)}, {"b", std::log(0.5)}};
  EXPECT_NEAR(sum_logprobs(tokens), std::log(0.25), 1e-12);
}

TEST(WireFormat, ChatBodyCarriesRequestFields) {
  CompletionRequest request = user_request("hello", 42);
  request.want_logprobs = true;
  const json body = json::parse(chat_completion_body(request));
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "hello");
  EXPECT_EQ(body["temperature"], 1.0);
  EXPECT_EQ(body["logprobs"], true);
  EXPECT_EQ(body["seed"], 42);
}

TEST(WireFormat, ParsesChatCompletionWithLogprobs) {
  const json body = {
      {"choices",
       {{{"message", {{"role", "assistant"}, {"content", "Lake Erie"}}},
         {"logprobs",
          {{"content",
            {{{"token", "Lake"}, {"logprob", std::log(0.5)}},
             {{"token", " Erie"}, {"logprob", std::log(0.5)}}}}}}}}}};
  const auto response = parse_chat_completion(body.dump());
  EXPECT_EQ(response.text, "Lake Erie");
  ASSERT_TRUE(response.token_logprobs.has_value());
  EXPECT_NEAR(sum_logprobs(*response.token_logprobs), std::log(0.25), 1e-12);
}

TEST(WireFormat, MalformedBodyIsBadResponse) {
  try {
    parse_chat_completion("{not json");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kBadResponse);
  }
}

TEST(WireFormat, EchoScoreSkipsPromptTokens) {
  const json body = {
      {"choices",
       {{{"logprobs",
          {{"tokens", {"Q", ":", " Lake", " Erie"}},
           {"token_logprobs", {nullptr, -1.0, -0.5, -0.25}},
           {"text_offset", {0, 1, 2, 7}}}}}}}};
  EXPECT_NEAR(parse_echo_score(body.dump(), 2), -0.75, 1e-12);
}

// A throwaway OpenAI-shaped server on a random local port.
class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

class HttpBackendTest : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv("STRATSAMPLE_TEST_KEY", "sk-test", 1); }
  void TearDown() override { ::unsetenv("STRATSAMPLE_TEST_KEY"); }

  HttpBackend make(const std::string& url, bool scoring = false) {
    HttpBackendOptions options;
    options.base_url = url;
    options.model = "test-model";
    options.api_key_env = "STRATSAMPLE_TEST_KEY";
    options.initial_backoff = std::chrono::milliseconds(1);
    options.timeout = std::chrono::milliseconds(5000);
    options.enable_scoring = scoring;
    return HttpBackend(options);
  }
};

TEST_F(HttpBackendTest, PostsChatCompletionWithBearerKey) {
  LocalServer local;
  std::string auth, model;
  local.server().Post("/v1/chat/completions",
                      [&](const httplib::Request& req, httplib::Response& res) {
                        auth = req.get_header_value("Authorization");
                        model = json::parse(req.body)["model"];
                        res.set_content(
                            R"({"choices":[{"message":{"content":"Ohio"}}]})",
                            "application/json");
                      });
  auto backend = make(local.url());
  CompletionRequest request = user_request("Name a state");
  request.model.clear();
  EXPECT_EQ(backend.complete(request).text, "Ohio");
  EXPECT_EQ(auth, "Bearer sk-test");
  EXPECT_EQ(model, "test-model");
}

TEST_F(HttpBackendTest, RetriesServerErrors) {
  LocalServer local;
  std::atomic<int> hits{0};
  local.server().Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                        if (++hits < 3) {
                          res.status = 500;
                          return;
                        }
                        res.set_content(
                            R"({"choices":[{"message":{"content":"ok"}}]})",
                            "application/json");
                      });
  auto backend = make(local.url());
  EXPECT_EQ(backend.complete(user_request("x")).text, "ok");
  EXPECT_EQ(hits.load(), 3);
}

TEST_F(HttpBackendTest, GivesUpAfterMaxRetries) {
  LocalServer local;
  std::atomic<int> hits{0};
  local.server().Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                        ++hits;
                        res.status = 503;
                      });
  auto backend = make(local.url());
  try {
    backend.complete(user_request("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kHttpStatus);
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(hits.load(), 4);  // first try + 3 retries
}

TEST_F(HttpBackendTest, ClientErrorsAreNotRetried) {
  LocalServer local;
  std::atomic<int> hits{0};
  local.server().Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                        ++hits;
                        res.status = 400;
                      });
  auto backend = make(local.url());
  EXPECT_THROW(backend.complete(user_request("x")), BackendError);
  EXPECT_EQ(hits.load(), 1);
}

TEST_F(HttpBackendTest, MissingCredential) {
  ::unsetenv("STRATSAMPLE_TEST_KEY");
  auto backend = make("http://127.0.0.1:9");
  try {
    backend.complete(user_request("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kMissingCredential);
  }
}

TEST_F(HttpBackendTest, EchoScoringSumsContinuationTokens) {
  LocalServer local;
  json seen;
  local.server().Post("/v1/completions",
                      [&](const httplib::Request& req, httplib::Response& res) {
                        seen = json::parse(req.body);
                        const json body = {
                            {"choices",
                             {{{"logprobs",
                                {{"tokens", {"Q", "?", " Lake", " Erie", "\n"}},
                                 {"token_logprobs",
                                  {nullptr, -2.0, -0.5, -0.25, -0.1}},
                                 {"text_offset", {0, 1, 2, 7, 12}}}}}}}};
                        res.set_content(body.dump(), "application/json");
                      });
  auto backend = make(local.url(), /*scoring=*/true);
  EXPECT_NEAR(backend.score_continuation("Q?", " Lake Erie"), -0.75, 1e-12);
  EXPECT_EQ(seen["echo"], true);
  EXPECT_EQ(seen["prompt"], "Q? Lake Erie");
}

TEST_F(HttpBackendTest, ScoringDisabledByDefault) {
  auto backend = make("http://127.0.0.1:9");
  EXPECT_FALSE(backend.supports_scoring());
  EXPECT_THROW(backend.score_continuation("a", " b"), BackendError);
}

TEST(MakeBackend, BuildsFromSpec) {
  EXPECT_EQ(backend_kind_from_string("mock-scripted"), BackendKind::kMockScripted);
  EXPECT_THROW(backend_kind_from_string("carrier-pigeon"), InvalidArgument);
  BackendSpec spec;
  spec.kind = BackendKind::kMockCategorical;
  spec.fixture = testing::fixture("mock_pipeline.json");
  EXPECT_TRUE(make_backend(spec)->supports_scoring());
}

}  // namespace
}  // namespace stratsample

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

#ifndef STRATSAMPLE_BACKEND_H_
#define STRATSAMPLE_BACKEND_H_

// Language-model access: free-form chat completion and forced-continuation
// scoring. Implementations: an OpenAI-compatible HTTP client and two
// deterministic mocks (a scripted transcript replayer and a categorical
// answer table).

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stratsample/error.h"
#include "stratsample/random.h"

namespace stratsample {

enum class Role { kSystem, kUser, kAssistant };

const char* to_string(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  bool want_logprobs = false;
  std::optional<std::uint64_t> seed;
};

// Throws InvalidArgument on an empty message list, a temperature outside
// [0, 2], a nonpositive max_tokens or a blank system/user message.
void validate(const CompletionRequest& request);

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;  // <= 0
};

struct CompletionResponse {
  std::string text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
};

double sum_logprobs(std::span<const TokenLogprob> tokens);

enum class BackendErrorKind {
  kTransport,
  kHttpStatus,
  kMissingCredential,
  kScriptExhausted,
  kScoringUnsupported,
  kBadResponse,
};

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message,
               int status = 0)
      : Error(message), kind_(kind), status_(status) {}

  BackendErrorKind kind() const { return kind_; }
  int status() const { return status_; }

  // Transport failures and 5xx responses are worth retrying; everything else
  // is permanent.
  bool retryable() const {
    return kind_ == BackendErrorKind::kTransport ||
           (kind_ == BackendErrorKind::kHttpStatus && status_ >= 500);
  }

 private:
  BackendErrorKind kind_;
  int status_;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual CompletionResponse complete(const CompletionRequest& request) = 0;

  virtual bool supports_scoring() const = 0;

  // Sum of token log-probabilities of `continuation` forced after `prompt`.
  // Throws BackendError(kScoringUnsupported) when supports_scoring() is false.
  virtual double score_continuation(std::string_view prompt,
                                    std::string_view continuation) = 0;

  virtual std::string model_id() const = 0;
};

// ---------------------------------------------------------------------------
// HTTP

struct HttpBackendOptions {
  std::string base_url;  // e.g. "https://api.openai.com"
  std::string model;
  std::string api_key_env = "STRATSAMPLE_API_KEY";
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  // Forced-continuation scoring goes through the legacy completions route
  // with echo=true; only enable it for servers that implement that.
  bool enable_scoring = false;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  CompletionResponse complete(const CompletionRequest& request) override;
  bool supports_scoring() const override { return options_.enable_scoring; }
  double score_continuation(std::string_view prompt,
                            std::string_view continuation) override;
  std::string model_id() const override { return options_.model; }

  const HttpBackendOptions& options() const { return options_; }

 private:
  std::string post_json(const std::string& route, const std::string& body);

  HttpBackendOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// Request body for POST <base_url>/v1/chat/completions.
std::string chat_completion_body(const CompletionRequest& request);
// Parses an OpenAI chat.completion response object.
CompletionResponse parse_chat_completion(std::string_view body);
// Sums echoed prompt logprobs for the characters at [prompt_chars, end).
double parse_echo_score(std::string_view body, std::size_t prompt_chars);

// ---------------------------------------------------------------------------
// Scripted mock: replays fixture responses in order, one per complete().

class ScriptedMockBackend : public Backend {
 public:
  explicit ScriptedMockBackend(std::vector<std::string> responses,
                               std::string model = "mock-scripted");

  // JSON file: {"model": "...", "responses": ["...", ...]}
  static std::unique_ptr<ScriptedMockBackend> from_file(
      const std::filesystem::path& path);

  CompletionResponse complete(const CompletionRequest& request) override;
  bool supports_scoring() const override { return false; }
  double score_continuation(std::string_view prompt,
                            std::string_view continuation) override;
  std::string model_id() const override { return model_; }

  std::size_t calls() const;
  std::size_t remaining() const;
  std::vector<CompletionRequest> received() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::vector<CompletionRequest> received_;
  std::string model_;
};

// ---------------------------------------------------------------------------
// Categorical mock: answers are drawn from a probability table chosen by the
// first rule that matches the prompt (the last user message for complete(),
// the prompt text for score_continuation()).

struct CategoricalTable {
  // Insertion order is the draw order. Probabilities sum to at most 1; the
  // remainder goes to CategoricalMockConfig::residual_answer.
  std::vector<std::pair<std::string, double>> entries;

  double probability(std::string_view answer) const;  // 0 if unlisted
};

struct CategoricalRule {
  std::vector<std::string> contains;  // every substring must occur
  std::vector<std::string> excludes;  // none may occur
  std::optional<std::string> exact;   // whole-prompt equality
  CategoricalTable table;

  bool matches(std::string_view prompt) const;
};

struct CategoricalMockConfig {
  std::vector<CategoricalRule> rules;
  CategoricalTable default_table;
  double floor = 1e-9;
  std::string residual_answer = "Invalid";
  std::uint64_t seed = 0;
  std::string model = "mock-categorical";
};

class CategoricalMockBackend : public Backend {
 public:
  explicit CategoricalMockBackend(CategoricalMockConfig config);

  // JSON file:
  // {"model": "...", "floor": 1e-9, "seed": 0, "residual": "Invalid",
  //  "default": {"Erie": 0.9, "Huron": 0.1},
  //  "rules": [{"contains": ["..."], "excludes": ["..."], "exact": "...",
  //             "table": {...}}]}
  static std::unique_ptr<CategoricalMockBackend> from_file(
      const std::filesystem::path& path);

  // With request.seed set the draw depends only on (table, seed); otherwise
  // an internal engine seeded from config.seed is advanced.
  CompletionResponse complete(const CompletionRequest& request) override;
  bool supports_scoring() const override { return true; }
  // ln p(continuation) from the selected table, ln(floor) when unlisted and
  // 0 for an empty continuation. The continuation is trimmed first.
  double score_continuation(std::string_view prompt,
                            std::string_view continuation) override;
  std::string model_id() const override { return config_.model; }

  const CategoricalTable& table_for(std::string_view prompt) const;
  const CategoricalMockConfig& config() const { return config_; }

 private:
  std::string draw(const CategoricalTable& table, std::uint64_t seed) const;

  CategoricalMockConfig config_;
  mutable std::mutex mu_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Decorator counting calls to the wrapped backend.

class CountingBackend : public Backend {
 public:
  explicit CountingBackend(std::shared_ptr<Backend> inner)
      : inner_(std::move(inner)) {}

  CompletionResponse complete(const CompletionRequest& request) override {
    ++completions_;
    return inner_->complete(request);
  }
  bool supports_scoring() const override { return inner_->supports_scoring(); }
  double score_continuation(std::string_view prompt,
                            std::string_view continuation) override {
    ++scores_;
    return inner_->score_continuation(prompt, continuation);
  }
  std::string model_id() const override { return inner_->model_id(); }

  std::size_t completions() const { return completions_.load(); }
  std::size_t scores() const { return scores_.load(); }
  void reset() {
    completions_ = 0;
    scores_ = 0;
  }

 private:
  std::shared_ptr<Backend> inner_;
  std::atomic<std::size_t> completions_{0};
  std::atomic<std::size_t> scores_{0};
};

// ---------------------------------------------------------------------------

enum class BackendKind { kHttp, kMockScripted, kMockCategorical };

BackendKind backend_kind_from_string(std::string_view text);

struct BackendSpec {
  BackendKind kind = BackendKind::kMockCategorical;
  std::string base_url;
  std::string model;
  std::filesystem::path fixture;  // mocks only
  bool enable_scoring = false;    // http only
};

std::shared_ptr<Backend> make_backend(const BackendSpec& spec);

}  // namespace stratsample

#endif  // STRATSAMPLE_BACKEND_H_

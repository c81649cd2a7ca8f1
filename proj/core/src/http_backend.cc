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

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "stratsample/backend.h"

namespace stratsample {
namespace {

using nlohmann::json;

// Splits "https://host:8443/prefix" into {"https://host:8443", "/prefix"}.
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  const std::size_t host_start =
      scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const std::size_t path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

std::string chat_completion_body(const CompletionRequest& request) {
  json messages = json::array();
  for (const ChatMessage& message : request.messages) {
    messages.push_back(
        {{"role", to_string(message.role)}, {"content", message.content}});
  }
  json body = {
      {"model", request.model},
      {"messages", std::move(messages)},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
      {"logprobs", request.want_logprobs},
  };
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

CompletionResponse parse_chat_completion(std::string_view body) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.contains("choices") ||
      !doc["choices"].is_array() || doc["choices"].empty()) {
    throw BackendError(BackendErrorKind::kBadResponse,
                       "malformed chat completion response");
  }
  const json& choice = doc["choices"][0];
  CompletionResponse response;
  if (!choice.contains("message") || !choice["message"].is_object() ||
      !choice["message"].contains("content")) {
    throw BackendError(BackendErrorKind::kBadResponse,
                       "chat completion response lacks message content");
  }
  const json& content = choice["message"]["content"];
  if (content.is_string()) response.text = content.get<std::string>();

  if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
      choice["logprobs"].contains("content") &&
      choice["logprobs"]["content"].is_array()) {
    std::vector<TokenLogprob> tokens;
    for (const json& t : choice["logprobs"]["content"]) {
      const double lp = t.value("logprob", 0.0);
      tokens.push_back({t.value("token", std::string()), std::min(lp, 0.0)});
    }
    response.token_logprobs = std::move(tokens);
  }
  return response;
}

double parse_echo_score(std::string_view body, std::size_t prompt_chars) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.contains("choices") ||
      !doc["choices"].is_array() || doc["choices"].empty()) {
    throw BackendError(BackendErrorKind::kBadResponse,
                       "malformed completion response");
  }
  const json& lp = doc["choices"][0].value("logprobs", json::object());
  if (!lp.contains("tokens") || !lp.contains("token_logprobs") ||
      !lp.contains("text_offset")) {
    throw BackendError(BackendErrorKind::kBadResponse,
                       "completion response lacks echoed logprobs");
  }
  const json& tokens = lp["tokens"];
  const json& logprobs = lp["token_logprobs"];
  const json& offsets = lp["text_offset"];
  const std::size_t n =
      std::min({tokens.size(), logprobs.size(), offsets.size()});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto offset = offsets[i].get<std::size_t>();
    const auto length = tokens[i].get<std::string>().size();
    // Tokens generated past the echo (max_tokens >= 1) start at or after the
    // end of the scored text and are excluded by the caller's offsets.
    if (offset + length <= prompt_chars) continue;
    if (logprobs[i].is_null()) continue;
    total += logprobs[i].get<double>();
  }
  return total;
}

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)) {
  auto [host, prefix] = split_base_url(options_.base_url);
  scheme_host_port_ = std::move(host);
  path_prefix_ = std::move(prefix);
}

std::string HttpBackend::post_json(const std::string& route,
                                   const std::string& body) {
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw BackendError(BackendErrorKind::kMissingCredential,
                       "environment variable " + options_.api_key_env +
                           " is not set");
  }

  httplib::Client client(scheme_host_port_);
  const auto timeout_s = options_.timeout.count() / 1000;
  const auto timeout_us = (options_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(timeout_s, timeout_us);
  client.set_read_timeout(timeout_s, timeout_us);
  client.set_write_timeout(timeout_s, timeout_us);
  client.set_bearer_token_auth(key);

  const std::string path = path_prefix_ + route;
  auto backoff = options_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    std::optional<BackendError> failure;
    auto result = client.Post(path, body, "application/json");
    if (!result) {
      failure.emplace(BackendErrorKind::kTransport,
                      "transport failure: " + httplib::to_string(result.error()));
    } else if (result->status < 200 || result->status >= 300) {
      failure.emplace(BackendErrorKind::kHttpStatus,
                      "HTTP " + std::to_string(result->status) + ": " +
                          result->body.substr(0, 512),
                      result->status);
    } else {
      return result->body;
    }
    if (!failure->retryable() || attempt >= options_.max_retries) {
      throw *failure;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  validate(request);
  CompletionRequest routed = request;
  if (routed.model.empty()) routed.model = options_.model;
  return parse_chat_completion(
      post_json("/v1/chat/completions", chat_completion_body(routed)));
}

double HttpBackend::score_continuation(std::string_view prompt,
                                       std::string_view continuation) {
  if (!options_.enable_scoring) {
    throw BackendError(BackendErrorKind::kScoringUnsupported,
                       "scoring unsupported");
  }
  if (continuation.empty()) return 0.0;
  const std::string full = std::string(prompt) + std::string(continuation);
  const json body = {
      {"model", options_.model}, {"prompt", full},  {"max_tokens", 1},
      {"temperature", 0.0},      {"echo", true},    {"logprobs", 1},
  };
  const std::string response = post_json("/v1/completions", body.dump());

  // Only tokens inside the scored text count; drop the generated one.
  json doc = json::parse(response, nullptr, false);
  if (!doc.is_discarded() && doc.contains("choices") &&
      doc["choices"].is_array() && !doc["choices"].empty()) {
    json& lp = doc["choices"][0]["logprobs"];
    if (lp.is_object() && lp.contains("text_offset")) {
      json tokens = json::array(), logprobs = json::array(),
           offsets = json::array();
      for (std::size_t i = 0; i < lp["text_offset"].size(); ++i) {
        if (lp["text_offset"][i].get<std::size_t>() >= full.size()) break;
        tokens.push_back(lp["tokens"][i]);
        logprobs.push_back(lp["token_logprobs"][i]);
        offsets.push_back(lp["text_offset"][i]);
      }
      lp["tokens"] = tokens;
      lp["token_logprobs"] = logprobs;
      lp["text_offset"] = offsets;
    }
  }
  return std::min(0.0, parse_echo_score(doc.dump(), prompt.size()));
}

}  // namespace stratsample

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
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stratsample/backend.h"
#include "stratsample/text.h"

namespace stratsample {
namespace {

using nlohmann::ordered_json;

ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open fixture " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ordered_json doc = ordered_json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) {
    throw ParseError("fixture is not valid JSON: " + path.string());
  }
  return doc;
}

const std::string& last_user_message(const CompletionRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend();
       ++it) {
    if (it->role == Role::kUser) return it->content;
  }
  return request.messages.back().content;
}

CategoricalTable parse_table(const ordered_json& node,
                             const std::string& where) {
  if (!node.is_object()) throw ParseError(where + ": table must be an object");
  CategoricalTable table;
  for (const auto& [answer, p] : node.items()) {
    if (!p.is_number()) {
      throw ParseError(where + "." + answer + ": probability must be a number");
    }
    table.entries.emplace_back(answer, p.get<double>());
  }
  return table;
}

std::vector<std::string> string_list(const ordered_json& node,
                                     const char* field) {
  std::vector<std::string> out;
  if (!node.contains(field)) return out;
  for (const auto& s : node[field]) out.push_back(s.get<std::string>());
  return out;
}

void check_table(const CategoricalTable& table) {
  double total = 0.0;
  for (const auto& [answer, p] : table.entries) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("table probability for '" + answer +
                            "' outside [0, 1]");
    }
    total += p;
  }
  if (total > 1.0 + 1e-9) {
    throw InvalidArgument("categorical table sums to more than 1");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ScriptedMockBackend::ScriptedMockBackend(std::vector<std::string> responses,
                                         std::string model)
    : responses_(std::move(responses)), model_(std::move(model)) {}

std::unique_ptr<ScriptedMockBackend> ScriptedMockBackend::from_file(
    const std::filesystem::path& path) {
  const ordered_json doc = read_json_file(path);
  if (!doc.contains("responses") || !doc["responses"].is_array()) {
    throw ParseError(path.string() + ": missing \"responses\" array");
  }
  std::vector<std::string> responses;
  for (const auto& r : doc["responses"]) {
    responses.push_back(r.get<std::string>());
  }
  return std::make_unique<ScriptedMockBackend>(
      std::move(responses), doc.value("model", std::string("mock-scripted")));
}

CompletionResponse ScriptedMockBackend::complete(
    const CompletionRequest& request) {
  validate(request);
  std::lock_guard<std::mutex> lock(mu_);
  received_.push_back(request);
  if (next_ >= responses_.size()) {
    throw BackendError(BackendErrorKind::kScriptExhausted,
                       "scripted backend has no responses left");
  }
  return CompletionResponse{responses_[next_++], std::nullopt};
}

double ScriptedMockBackend::score_continuation(std::string_view,
                                               std::string_view) {
  throw BackendError(BackendErrorKind::kScoringUnsupported,
                     "scoring unsupported");
}

std::size_t ScriptedMockBackend::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return received_.size();
}

std::size_t ScriptedMockBackend::remaining() const {
  std::lock_guard<std::mutex> lock(mu_);
  return responses_.size() - next_;
}

std::vector<CompletionRequest> ScriptedMockBackend::received() const {
  std::lock_guard<std::mutex> lock(mu_);
  return received_;
}

// ---------------------------------------------------------------------------

double CategoricalTable::probability(std::string_view answer) const {
  for (const auto& [a, p] : entries) {
    if (a == answer) return p;
  }
  return 0.0;
}

bool CategoricalRule::matches(std::string_view prompt) const {
  if (exact && prompt != *exact) return false;
  for (const std::string& s : contains) {
    if (prompt.find(s) == std::string_view::npos) return false;
  }
  for (const std::string& s : excludes) {
    if (prompt.find(s) != std::string_view::npos) return false;
  }
  return true;
}

CategoricalMockBackend::CategoricalMockBackend(CategoricalMockConfig config)
    : config_(std::move(config)), rng_(mix64(config_.seed)) {
  if (!(config_.floor > 0.0 && config_.floor <= 1.0)) {
    throw InvalidArgument("probability floor must be in (0, 1]");
  }
  check_table(config_.default_table);
  for (const CategoricalRule& rule : config_.rules) check_table(rule.table);
}

std::unique_ptr<CategoricalMockBackend> CategoricalMockBackend::from_file(
    const std::filesystem::path& path) {
  const ordered_json doc = read_json_file(path);
  CategoricalMockConfig config;
  config.model = doc.value("model", config.model);
  config.floor = doc.value("floor", config.floor);
  config.seed = doc.value("seed", config.seed);
  config.residual_answer = doc.value("residual", config.residual_answer);
  if (doc.contains("default")) {
    config.default_table = parse_table(doc["default"], "default");
  }
  if (doc.contains("rules")) {
    std::size_t i = 0;
    for (const auto& r : doc["rules"]) {
      const std::string where = "rules[" + std::to_string(i++) + "]";
      CategoricalRule rule;
      rule.contains = string_list(r, "contains");
      rule.excludes = string_list(r, "excludes");
      if (r.contains("exact")) rule.exact = r["exact"].get<std::string>();
      if (!r.contains("table")) throw ParseError(where + ": missing table");
      rule.table = parse_table(r["table"], where + ".table");
      config.rules.push_back(std::move(rule));
    }
  }
  return std::make_unique<CategoricalMockBackend>(std::move(config));
}

const CategoricalTable& CategoricalMockBackend::table_for(
    std::string_view prompt) const {
  for (const CategoricalRule& rule : config_.rules) {
    if (rule.matches(prompt)) return rule.table;
  }
  return config_.default_table;
}

std::string CategoricalMockBackend::draw(const CategoricalTable& table,
                                         std::uint64_t seed) const {
  Rng rng(mix64(seed));
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (const auto& [answer, p] : table.entries) {
    cumulative += p;
    if (u < cumulative) return answer;
  }
  return config_.residual_answer;
}

CompletionResponse CategoricalMockBackend::complete(
    const CompletionRequest& request) {
  validate(request);
  std::uint64_t seed = 0;
  if (request.seed) {
    seed = *request.seed;
  } else {
    std::lock_guard<std::mutex> lock(mu_);
    seed = rng_();
  }
  const CategoricalTable& table = table_for(last_user_message(request));
  CompletionResponse response{draw(table, seed), std::nullopt};
  if (request.want_logprobs) {
    const double p = table.probability(response.text);
    response.token_logprobs = std::vector<TokenLogprob>{
        {response.text, std::log(p > 0.0 ? p : config_.floor)}};
  }
  return response;
}

double CategoricalMockBackend::score_continuation(
    std::string_view prompt, std::string_view continuation) {
  const std::string answer = text::trim(continuation);
  if (answer.empty()) return 0.0;
  const double p = table_for(prompt).probability(answer);
  return std::log(p > 0.0 ? p : config_.floor);
}

}  // namespace stratsample

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

#include "stratsample/estimate.h"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <regex>
#include <thread>

#include "stratsample/text.h"

namespace stratsample {

const std::string_view kForecasterSystemPrompt =
    "You are an expert superforecaster, familiar with the work of Tetlock and "
    "others.\n"
    "Your mission is to generate accurate predictions for forecasting "
    "questions.\n"
    "Aggregate the information provided by the user. Make sure to give "
    "detailed reasoning.";

namespace {

constexpr std::string_view kMarginalInstructions = R"(

Instructions:
1. Provide at least 3 reasons why the answer might be no.
{ Insert your thoughts }
2. Provide at least 3 reasons why the answer might be yes.
{ Insert your thoughts }
3. Rate the strength of each of the reasons given in the last two responses. Think like a superforecaster (e.g. Nate Silver).
{ Insert your rating of the strength of each reason }
4. Aggregate your considerations.
{ Insert your aggregated considerations }
5. Output your answer (a number between 0 and 1) with an asterisk at the beginning and end of the decimal.
{ Insert your answer })";

constexpr std::string_view kFinalizeInstructions = R"(
Instructions:
1. For each Y/N statement, is it redundant with another statement?
Y/N statement: <description>
Is redundant? <Y/N: Explanation>
2. Are any of the probabilities in accurate?  If it's sufficiently accurate just report back the same value.
Y/N statement: <Description>
Is accurate? <Y/N: Explanation>
Probability: <Probability>
3. Pick at most three statements that are least redundant and pair well together. Prefer ones that are closest to 50% for most information.

Final List of True/False Properties:
1. <Y/N Properties> :: <Probability>
2. <Y/N Properties> :: <Probability>)";

std::string format_probability(double p) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", p);
  return buffer;
}

CompletionRequest stage_request(Backend& backend, const StageOptions& options,
                                std::vector<ChatMessage> messages) {
  CompletionRequest request;
  request.model = options.model.empty() ? backend.model_id() : options.model;
  request.messages = std::move(messages);
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;
  request.seed = options.seed;
  return request;
}

const std::regex& asterisk_decimal() {
  static const std::regex re(R"(\*\s*(\d+(?:\.\d+)?|\.\d+)\s*(%?)\s*\*)");
  return re;
}

const std::regex& finalized_item() {
  static const std::regex re(
      R"(^\s*(?:\*\*)?\d+[.)](?:\*\*)?\s+(.*\S)\s*::\s*\**\s*(\d+(?:\.\d+)?|\.\d+)\s*(%?)\s*\**\s*$)");
  return re;
}

const std::regex& numbered_line() {
  static const std::regex re(R"(^\s*(?:\*\*)?\d+[.)])");
  return re;
}

}  // namespace

std::string marginal_user_message(std::string_view user_request,
                                  std::string_view property_statement) {
  std::string out = "I am tasked to estimate the probability that a random "
                    "solution to \"";
  out.append(user_request);
  out.append("\" has the following property \"");
  out.append(property_statement);
  out.append("\"");
  out.append(kMarginalInstructions);
  return out;
}

std::vector<ChatMessage> build_marginal_prompt(
    std::string_view user_request, const PartitionProperty& property) {
  if (text::is_blank(property.statement)) {
    throw InvalidArgument("property statement is empty");
  }
  return {
      {Role::kSystem, std::string(kForecasterSystemPrompt)},
      {Role::kUser, marginal_user_message(user_request, property.statement)},
  };
}

std::string finalize_user_message(
    std::string_view user_request,
    std::span<const MarginalEstimate> candidates) {
  std::string out = "I'm playing a game where my friend has been tasked to:\n\"";
  out.append(user_request);
  out.append(
      "\"\nI have the following Y/N statements I can ask my friend. I have "
      "probabilities that I think it's true:\n");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.append(std::to_string(i + 1));
    out.append(". ");
    out.append(candidates[i].property.statement);
    out.append(" :: ");
    out.append(format_probability(candidates[i].p_true));
    out.push_back('\n');
  }
  out.append(kFinalizeInstructions);
  return out;
}

std::vector<ChatMessage> build_finalize_prompt(
    std::string_view user_request,
    std::span<const MarginalEstimate> candidates) {
  return {
      {Role::kSystem, std::string(kForecasterSystemPrompt)},
      {Role::kUser, finalize_user_message(user_request, candidates)},
  };
}

ParsedProbability interpret_probability(std::string_view token) {
  std::string t = text::trim(token);
  bool percent = false;
  if (!t.empty() && t.back() == '%') {
    percent = true;
    t = text::trim(std::string_view(t).substr(0, t.size() - 1));
  }
  char* end = nullptr;
  const double raw = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ParseError("not a probability: " + std::string(token));
  }

  ParsedProbability out{raw, std::nullopt};
  const bool integral = t.find('.') == std::string::npos;
  if (percent || (integral && raw > 1.0 && raw <= 100.0)) {
    out.value = raw / 100.0;
    out.warning = "read '" + std::string(token) + "' as a percentage";
  }
  if (out.value > 1.0 || out.value < 0.0) {
    const double clamped = out.value > 1.0 ? 1.0 : 0.0;
    out.warning = "probability '" + std::string(token) + "' clamped to " +
                  format_probability(clamped);
    out.value = clamped;
  }
  return out;
}

std::optional<ParsedProbability> parse_marginal_response(std::string_view raw) {
  const std::string s(raw);
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), asterisk_decimal());
       it != std::sregex_iterator(); ++it) {
    last = (*it)[1].str() + (*it)[2].str();
  }
  if (!last) return std::nullopt;
  return interpret_probability(*last);
}

namespace {

// One marginal estimate with a single retry. Keeps the raw responses even
// when neither parses, so the transcript can show what the model said.
bool try_estimate_marginal(Backend& backend, std::string_view user_request,
                           const PartitionProperty& property,
                           const StageOptions& options, MarginalResult& result) {
  const CompletionRequest request = stage_request(
      backend, options, build_marginal_prompt(user_request, property));
  result = MarginalResult{{property, 0.0}, {}, {}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    CompletionResponse response = backend.complete(request);
    result.raw_responses.push_back(response.text);
    if (auto parsed = parse_marginal_response(response.text)) {
      result.estimate.p_true = parsed->value;
      if (parsed->warning) {
        result.warnings.push_back(property.id + ": " + *parsed->warning);
      }
      return true;
    }
  }
  return false;
}

std::string marginal_failure(const PartitionProperty& property) {
  return "no asterisk-delimited probability for property " + property.id +
         " after retry";
}

}  // namespace

MarginalResult estimate_marginal(Backend& backend,
                                 std::string_view user_request,
                                 const PartitionProperty& property,
                                 const StageOptions& options) {
  MarginalResult result{{property, 0.0}, {}, {}};
  if (!try_estimate_marginal(backend, user_request, property, options, result)) {
    throw ParseError(marginal_failure(property));
  }
  return result;
}

std::vector<FinalizedLine> parse_finalized_list(std::string_view raw) {
  const std::vector<std::string> lines = text::split_lines(raw);
  std::size_t header = lines.size();
  const std::string needle = text::to_lower(kPropertyListHeader);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::to_lower(lines[i]).find(needle) != std::string::npos) header = i;
  }
  if (header == lines.size()) return {};

  std::vector<FinalizedLine> out;
  std::smatch match;
  for (std::size_t i = header + 1; i < lines.size(); ++i) {
    if (std::regex_match(lines[i], match, finalized_item())) {
      out.push_back({text::trim(match[1].str()),
                     interpret_probability(match[2].str() + match[3].str())});
    } else if (!text::is_blank(lines[i]) &&
               !std::regex_search(lines[i], numbered_line()) && !out.empty()) {
      break;
    }
  }
  return out;
}

FinalizeResult finalize_stratification(
    Backend& backend, std::string_view user_request,
    std::span<const MarginalEstimate> candidates, const StageOptions& options) {
  if (candidates.empty()) {
    throw InvalidArgument("finalization needs at least one candidate");
  }
  const CompletionRequest request = stage_request(
      backend, options, build_finalize_prompt(user_request, candidates));
  CompletionResponse response = backend.complete(request);

  std::vector<FinalizedLine> lines = parse_finalized_list(response.text);
  if (lines.empty()) {
    throw ParseError("finalization response has no \"<statement> :: "
                     "<probability>\" lines");
  }

  std::vector<std::string> warnings;
  if (lines.size() > kMaxProperties) {
    warnings.push_back("kept the first " + std::to_string(kMaxProperties) +
                       " of " + std::to_string(lines.size()) +
                       " finalized properties");
    lines.resize(kMaxProperties);
  }

  std::vector<MarginalEstimate> selected;
  std::vector<ProbabilityRevision> revisions;
  for (const FinalizedLine& line : lines) {
    const std::string key = text::fold_for_match(line.statement);
    const MarginalEstimate* match = nullptr;
    for (const MarginalEstimate& c : candidates) {
      if (text::fold_for_match(c.property.statement) == key) {
        match = &c;
        break;
      }
    }
    if (match == nullptr) {
      warnings.push_back("dropped finalized statement matching no candidate: " +
                         line.statement);
      continue;
    }
    bool duplicate = false;
    for (const MarginalEstimate& s : selected) {
      duplicate = duplicate || s.property.id == match->property.id;
    }
    if (duplicate) {
      warnings.push_back("dropped repeated statement: " + line.statement);
      continue;
    }
    if (line.probability.warning) {
      warnings.push_back(match->property.id + ": " + *line.probability.warning);
    }
    if (line.probability.value != match->p_true) {
      revisions.push_back(
          {match->property.id, match->p_true, line.probability.value});
    }
    selected.push_back({match->property, line.probability.value});
  }
  if (selected.empty()) {
    throw ParseError("no finalized statement matched a candidate property");
  }

  return FinalizeResult{WeightedStratification(std::move(selected)),
                        std::move(response.text), std::move(warnings),
                        std::move(revisions)};
}

EstimationTranscript run_estimation(
    Backend& backend, std::string_view user_request,
    std::span<const PartitionProperty> properties,
    const EstimateOptions& options) {
  if (properties.empty()) {
    throw InvalidArgument("estimation needs at least one property");
  }

  const std::size_t n = properties.size();
  std::vector<MarginalResult> results(n, MarginalResult{{}, {}, {}});
  std::vector<char> parsed(n, 0);
  std::vector<std::string> parse_errors(n);
  std::vector<std::exception_ptr> failures(n);

  auto estimate_one = [&](std::size_t i) {
    try {
      parsed[i] = try_estimate_marginal(backend, user_request, properties[i],
                                        options.stage, results[i]);
      if (!parsed[i]) parse_errors[i] = marginal_failure(properties[i]);
    } catch (const ParseError& e) {
      parse_errors[i] = e.what();
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(options.fan_out, 1), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) estimate_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) estimate_one(i);
      });
    }
  }
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<MarginalAttempt> attempts;
  std::vector<MarginalEstimate> candidates;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < n; ++i) {
    MarginalAttempt attempt{properties[i], results[i].raw_responses,
                            std::nullopt, parse_errors[i]};
    if (parsed[i]) {
      attempt.p_true = results[i].estimate.p_true;
      candidates.push_back(results[i].estimate);
      warnings.insert(warnings.end(), results[i].warnings.begin(),
                      results[i].warnings.end());
    } else {
      warnings.push_back("excluded " + properties[i].id + ": " +
                         parse_errors[i]);
    }
    attempts.push_back(std::move(attempt));
  }
  if (candidates.empty()) {
    throw ParseError("every marginal estimation failed");
  }

  FinalizeResult finalized =
      finalize_stratification(backend, user_request, candidates, options.stage);
  warnings.insert(warnings.end(), finalized.warnings.begin(),
                  finalized.warnings.end());
  return EstimationTranscript{std::string(user_request),
                              std::move(attempts),
                              std::move(finalized.raw_response),
                              std::move(finalized.stratification),
                              std::move(warnings),
                              std::move(finalized.revisions)};
}

}  // namespace stratsample

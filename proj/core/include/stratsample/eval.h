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

#ifndef STRATSAMPLE_EVAL_H_
#define STRATSAMPLE_EVAL_H_

// Diversity measurement over underspecified questions.
//
// Coverage metrics work on sampled transcripts: recall is the fraction of
// ground-truth answers seen at least once, precision the fraction of
// attempts that are valid. Distribution metrics need a scoring backend:
// the probability of each valid answer is read off forced-continuation
// scores, leftover mass is "Invalid", and the SimpleStrat distribution is
// the rho-weighted mixture over strata. KL is measured as
// D(uniform over valid answers || response distribution), which stays
// finite whenever every valid answer has nonzero probability.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stratsample/backend.h"
#include "stratsample/cache.h"
#include "stratsample/core.h"
#include "stratsample/sampler.h"

namespace stratsample {

struct AnswerEntry {
  std::string canonical;
  std::vector<std::string> aliases;

  friend bool operator==(const AnswerEntry&, const AnswerEntry&) = default;
};

struct QuestionRecord {
  std::string id;
  std::string question;
  std::vector<AnswerEntry> answers;
  std::string domain;

  friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

// Throws InvalidArgument when the record has fewer than two answers or two
// canonical/alias strings normalize to the same text.
void validate(const QuestionRecord& record);

// Case-fold, trim, collapse whitespace, drop wrapping quotes and terminal
// punctuation, drop one leading article ("the", "a", "an").
std::string normalize_answer(std::string_view raw);

// Index into record.answers of the first entry whose canonical text or alias
// equals the normalized raw answer. No fuzzy matching.
std::optional<std::size_t> match_answer(std::string_view raw,
                                        const QuestionRecord& record);

struct SampleTranscript {
  std::string question_id;
  double temperature = 1.0;
  std::vector<std::string> raw_answers;
};

double coverage_recall(const SampleTranscript& transcript,
                       const QuestionRecord& record);
// Throws InvalidArgument on an empty transcript.
double precision(const SampleTranscript& transcript,
                 const QuestionRecord& record);
double f1(double precision, double recall);

struct ResponseDistribution {
  // Aligned with QuestionRecord::answers, keyed by canonical text.
  std::vector<std::pair<std::string, double>> probs;
  double invalid_mass = 0.0;

  double probability(std::string_view canonical) const;
};

// Probability of every canonical answer as a continuation of `prompt`.
// Mass left over goes to invalid_mass; if the answers sum past 1 they are
// rescaled and a warning is appended.
ResponseDistribution baseline_distribution(
    Backend& backend, std::string_view prompt, const QuestionRecord& record,
    std::vector<std::string>* warnings = nullptr);

// sum over strata of rho(l) * Pr[answer | render_prompt(request, l)].
ResponseDistribution simplestrat_distribution(
    Backend& backend, const WeightedStratification& stratification,
    std::string_view user_request, const QuestionRecord& record,
    std::vector<std::string>* warnings = nullptr);

// sum_s (1/n) ln((1/n) / p(s)) over the n valid answers, or +infinity when
// some valid answer has probability zero.
double kl_from_uniform(const ResponseDistribution& dist,
                       const QuestionRecord& record);

enum class Method { kBaseline, kSimpleStrat };

const char* to_string(Method method);
Method method_from_string(std::string_view text);

struct EvalConfig {
  std::vector<double> temperatures = {1.0};
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  std::vector<Method> methods = {Method::kBaseline, Method::kSimpleStrat};
  std::size_t concurrency = 1;
  // Stage options and invalid-retry cap; the sampling temperature is taken
  // from `temperatures`.
  PipelineOptions pipeline;
  // Computes distribution metrics when the backend supports scoring.
  bool distributions = true;
};

struct MetricsRow {
  std::string question_id;
  double temperature = 1.0;
  Method method = Method::kBaseline;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::optional<double> kl_nats;
  std::optional<double> invalid_mass;
  std::size_t fallbacks = 0;
  std::vector<std::string> raw_answers;
};

struct AggregateRow {
  double temperature = 1.0;
  Method method = Method::kBaseline;
  std::size_t questions = 0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::optional<double> kl_nats;  // mean over questions with a distribution
};

struct QuestionFailure {
  std::string question_id;
  std::string method;
  std::string message;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;  // question x temperature x method
  std::vector<AggregateRow> aggregates;
  std::vector<QuestionFailure> failures;
};

// Runs every question x temperature x method. Sample i of question q is
// driven by an engine seeded with derive_seed(seed, {q, i}), so the report
// does not depend on `concurrency`. Question-level failures are recorded
// and the run continues.
MetricsReport run_evaluation(Backend& backend,
                             const std::vector<QuestionRecord>& questions,
                             const EvalConfig& config,
                             PipelineCache* cache = nullptr);

// Columns: id,temp,method,recall,precision,f1,kl_nats,invalid_mass
std::string report_to_csv(const MetricsReport& report);
nlohmann::json report_to_json(const MetricsReport& report);

}  // namespace stratsample

#endif  // STRATSAMPLE_EVAL_H_

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

#ifndef STRATSAMPLE_ESTIMATE_H_
#define STRATSAMPLE_ESTIMATE_H_

// Stage 2: estimate the fraction of valid solutions satisfying each property,
// then let the model drop redundant properties, keep at most three and
// revise their probabilities. The joint over strata is the product of the
// final marginals (independence assumption).
//
// Binary properties need no extra normalization: p and 1 - p already sum to
// one, so core's normalize() is deliberately not applied here.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stratsample/autostrat.h"
#include "stratsample/backend.h"
#include "stratsample/core.h"

namespace stratsample {

extern const std::string_view kForecasterSystemPrompt;

std::string marginal_user_message(std::string_view user_request,
                                  std::string_view property_statement);
std::vector<ChatMessage> build_marginal_prompt(
    std::string_view user_request, const PartitionProperty& property);

std::string finalize_user_message(std::string_view user_request,
                                  std::span<const MarginalEstimate> candidates);
std::vector<ChatMessage> build_finalize_prompt(
    std::string_view user_request,
    std::span<const MarginalEstimate> candidates);

// A probability as written by the model, after percent handling and
// clamping to [0, 1].
struct ParsedProbability {
  double value = 0.0;
  std::optional<std::string> warning;
};

// "0.45" -> 0.45; "45%" or a bare integer in (1, 100] -> divided by 100;
// anything else outside [0, 1] is clamped with a warning.
ParsedProbability interpret_probability(std::string_view token);

// Last "*x*" decimal in a forecaster response; nullopt when there is none.
std::optional<ParsedProbability> parse_marginal_response(std::string_view raw);

struct MarginalResult {
  MarginalEstimate estimate;
  std::vector<std::string> raw_responses;
  std::vector<std::string> warnings;
};

// Throws ParseError when neither the first response nor the single retry
// contains an asterisk-delimited decimal.
MarginalResult estimate_marginal(Backend& backend,
                                 std::string_view user_request,
                                 const PartitionProperty& property,
                                 const StageOptions& options = {});

struct FinalizedLine {
  std::string statement;
  ParsedProbability probability;
};

// "<statement> :: <probability>" items after the last header line.
std::vector<FinalizedLine> parse_finalized_list(std::string_view raw);

// A property whose finalized probability differs from its first estimate.
struct ProbabilityRevision {
  std::string property_id;
  double estimated = 0.0;
  double finalized = 0.0;
};

struct FinalizeResult {
  WeightedStratification stratification;
  std::string raw_response;
  std::vector<std::string> warnings;
  std::vector<ProbabilityRevision> revisions;
};

// At most the first three parsed lines are kept. Each is matched back to a
// candidate by case- and punctuation-insensitive equality; unmatched lines
// are dropped with a warning and the finalized probability wins over the
// candidate's estimate.
FinalizeResult finalize_stratification(
    Backend& backend, std::string_view user_request,
    std::span<const MarginalEstimate> candidates,
    const StageOptions& options = {});

struct EstimateOptions {
  StageOptions stage;
  // Concurrent marginal estimations. Keep at 1 with scripted backends, whose
  // responses are consumed in call order.
  std::size_t fan_out = 1;
};

struct MarginalAttempt {
  PartitionProperty property;
  std::vector<std::string> raw_responses;
  std::optional<double> p_true;  // nullopt when parsing failed twice
  std::string error;
};

struct EstimationTranscript {
  std::string request;
  std::vector<MarginalAttempt> marginals;
  std::string finalize_raw_response;
  WeightedStratification stratification;
  std::vector<std::string> warnings;
  std::vector<ProbabilityRevision> revisions;
};

// One estimate_marginal per property, then finalize_stratification over the
// properties that parsed. Throws if every marginal estimation fails.
EstimationTranscript run_estimation(Backend& backend,
                                    std::string_view user_request,
                                    std::span<const PartitionProperty> properties,
                                    const EstimateOptions& options = {});

}  // namespace stratsample

#endif  // STRATSAMPLE_ESTIMATE_H_

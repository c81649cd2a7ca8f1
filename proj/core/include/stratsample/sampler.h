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

#ifndef STRATSAMPLE_SAMPLER_H_
#define STRATSAMPLE_SAMPLER_H_

// Stage 3: probabilistic prompting. A stratum is drawn from the joint, the
// request is augmented with the stratum's conditions and the model samples
// an answer inside it. "Invalid" replies trigger a fresh stratum draw, which
// conditions the prompt distribution on strata that actually have answers.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "stratsample/autostrat.h"
#include "stratsample/backend.h"
#include "stratsample/cache.h"
#include "stratsample/core.h"
#include "stratsample/estimate.h"
#include "stratsample/random.h"

namespace stratsample {

inline constexpr std::size_t kDefaultMaxInvalidRetries = 8;
inline constexpr std::string_view kInvalidAnswer = "Invalid";

inline constexpr std::string_view kAugmentationHeader =
    "Additionally, the answer must satisfy ALL of the following:";
inline constexpr std::string_view kNegationPrefix = "It is NOT the case that ";
inline constexpr std::string_view kAnswerFormatInstruction =
    "Answer with only the answer itself.";
inline constexpr std::string_view kConstrainedAnswerFormatInstruction =
    "Answer with only the answer itself, or the single word \"Invalid\" if no "
    "valid answer satisfies every condition.";

// Deterministic augmentation of a request for one stratum. With no
// properties the result is the request plus the answer-format instruction.
// Throws InvalidArgument when the stratum length differs from the property
// count.
std::string render_prompt(std::string_view user_request,
                          std::span<const PartitionProperty> properties,
                          const Stratum& stratum);

// The unaugmented prompt used by the baseline and by the Invalid fallback.
std::string render_baseline_prompt(std::string_view user_request);

// Trimmed, case-insensitive "Invalid" (a trailing period is tolerated).
bool is_invalid_answer(std::string_view answer);

struct ProbabilisticPrompt {
  std::string user_request;
  WeightedStratification stratification;
};

struct SampleOptions {
  std::string model;
  double temperature = 1.0;
  int max_tokens = 64;
  std::size_t max_invalid_retries = kDefaultMaxInvalidRetries;
};

struct SampleOutcome {
  std::string answer;
  Stratum stratum;            // last stratum drawn
  std::size_t attempts = 0;   // Invalid replies consumed
  std::string prompt_text;    // prompt that produced `answer`
  bool fell_back = false;     // answer came from the unaugmented prompt
};

// Up to max_invalid_retries augmented calls; if every one answers Invalid the
// unaugmented prompt is sent once and the outcome is flagged. Each call's
// request seed is drawn from `rng`, so a fixed seed reproduces the outcome.
SampleOutcome sample_response(Backend& backend,
                              const ProbabilisticPrompt& prompt,
                              const SampleOptions& options, Rng& rng);

struct PipelineOptions {
  StageOptions stage;
  std::size_t fan_out = 1;
  SampleOptions sample;
};

struct PreparedStratification {
  PipelineCacheEntry entry;
  bool cache_hit = false;
};

// Stages 1-2, served from `cache` when it holds an entry for
// (request, model). Pass nullptr (or a disabled cache) to always recompute.
PreparedStratification prepare_stratification(Backend& backend,
                                              std::string_view user_request,
                                              const PipelineOptions& options,
                                              PipelineCache* cache);

SampleOutcome run_pipeline(Backend& backend, std::string_view user_request,
                           const PipelineOptions& options, Rng& rng,
                           PipelineCache* cache);

}  // namespace stratsample

#endif  // STRATSAMPLE_SAMPLER_H_

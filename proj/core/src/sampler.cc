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

#include "stratsample/sampler.h"

#include <chrono>
#include <ctime>

#include "stratsample/text.h"

namespace stratsample {
namespace {

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

}  // namespace

std::string render_prompt(std::string_view user_request,
                          std::span<const PartitionProperty> properties,
                          const Stratum& stratum) {
  if (stratum.size() != properties.size()) {
    throw InvalidArgument("stratum length does not match property count");
  }
  std::string out(user_request);
  out.append("\n\n");
  if (properties.empty()) {
    out.append(kAnswerFormatInstruction);
    return out;
  }
  out.append(kAugmentationHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < properties.size(); ++i) {
    out.append("- ");
    if (!stratum[i]) out.append(kNegationPrefix);
    out.append(properties[i].statement);
    out.push_back('\n');
  }
  out.push_back('\n');
  out.append(kConstrainedAnswerFormatInstruction);
  return out;
}

std::string render_baseline_prompt(std::string_view user_request) {
  return render_prompt(user_request, {}, Stratum{});
}

bool is_invalid_answer(std::string_view answer) {
  std::string t = text::trim(answer);
  if (!t.empty() && t.back() == '.') t.pop_back();
  return text::iequals(t, kInvalidAnswer);
}

SampleOutcome sample_response(Backend& backend,
                              const ProbabilisticPrompt& prompt,
                              const SampleOptions& options, Rng& rng) {
  const std::vector<PartitionProperty> properties =
      prompt.stratification.properties();
  CompletionRequest request;
  request.model = options.model.empty() ? backend.model_id() : options.model;
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;

  SampleOutcome outcome;
  for (std::size_t attempt = 0; attempt < options.max_invalid_retries;
       ++attempt) {
    outcome.stratum = sample_stratum(prompt.stratification.joint(), rng);
    outcome.prompt_text =
        render_prompt(prompt.user_request, properties, outcome.stratum);
    request.messages = {{Role::kUser, outcome.prompt_text}};
    request.seed = rng();
    CompletionResponse response = backend.complete(request);
    if (!is_invalid_answer(response.text)) {
      outcome.answer = text::trim(response.text);
      outcome.attempts = attempt;
      return outcome;
    }
  }

  outcome.attempts = options.max_invalid_retries;
  outcome.fell_back = true;
  outcome.prompt_text = render_baseline_prompt(prompt.user_request);
  request.messages = {{Role::kUser, outcome.prompt_text}};
  request.seed = rng();
  outcome.answer = text::trim(backend.complete(request).text);
  return outcome;
}

PreparedStratification prepare_stratification(Backend& backend,
                                              std::string_view user_request,
                                              const PipelineOptions& options,
                                              PipelineCache* cache) {
  const std::string model =
      options.stage.model.empty() ? backend.model_id() : options.stage.model;
  const std::string key = cache_key(user_request, model);
  if (cache != nullptr) {
    if (auto hit = cache->load(key)) return {std::move(*hit), true};
  }

  std::optional<AutoStratTranscript> partial;
  if (cache != nullptr) partial = cache->load_autostrat(key);
  AutoStratTranscript autostrat =
      partial ? std::move(*partial)
              : run_auto_stratification(backend, user_request, options.stage);
  EstimationTranscript estimation =
      run_estimation(backend, user_request, autostrat.properties,
                     EstimateOptions{options.stage, options.fan_out});
  PipelineCacheEntry entry{key,
                           std::string(user_request),
                           model,
                           utc_timestamp(),
                           std::move(autostrat),
                           std::move(estimation)};
  if (cache != nullptr) cache->store(entry);
  return {std::move(entry), false};
}

SampleOutcome run_pipeline(Backend& backend, std::string_view user_request,
                           const PipelineOptions& options, Rng& rng,
                           PipelineCache* cache) {
  PreparedStratification prepared =
      prepare_stratification(backend, user_request, options, cache);
  const ProbabilisticPrompt prompt{
      std::string(user_request),
      prepared.entry.estimation.stratification};
  return sample_response(backend, prompt, options.sample, rng);
}

}  // namespace stratsample

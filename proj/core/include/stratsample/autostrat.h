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

#ifndef STRATSAMPLE_AUTOSTRAT_H_
#define STRATSAMPLE_AUTOSTRAT_H_

// Stage 1: ask the model for True/False properties that split the solution
// space of a request roughly in half.

#include <string>
#include <string_view>
#include <vector>

#include "stratsample/backend.h"
#include "stratsample/core.h"

namespace stratsample {

// Options shared by the prompt stages that precede answer sampling.
struct StageOptions {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::uint64_t> seed;
};

inline constexpr std::string_view kPropertyListHeader =
    "Final List of True/False Properties";

extern const std::string_view kAutoStratSystemPrompt;

// The user turn with the request substituted at the request slot.
std::string autostrat_user_message(std::string_view user_request);

// Frozen in-context example: one simulated user/assistant round.
extern const std::string_view kAutoStratExampleRequest;
extern const std::string_view kAutoStratExampleResponse;

// [system, example user, example assistant, live user].
// Throws InvalidArgument on a blank request.
std::vector<ChatMessage> build_autostrat_prompt(std::string_view user_request);

// Numbered items following the last header line. No header -> empty list;
// header with zero items -> ParseError("empty property list").
std::vector<PartitionProperty> parse_property_list(std::string_view raw);

struct AutoStratTranscript {
  std::string request;
  std::string raw_response;
  std::vector<PartitionProperty> properties;
};

// build -> complete -> parse, retrying once when nothing parses.
AutoStratTranscript run_auto_stratification(Backend& backend,
                                            std::string_view user_request,
                                            const StageOptions& options = {});

}  // namespace stratsample

#endif  // STRATSAMPLE_AUTOSTRAT_H_

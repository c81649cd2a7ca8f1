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

#include "stratsample/autostrat.h"

#include <regex>

#include "stratsample/text.h"

namespace stratsample {

const std::string_view kAutoStratSystemPrompt =
    "You're a helpful brainstorming assistant that is careful to consider all "
    "factors to a problem.";

namespace {

constexpr std::string_view kUserPrefix =
    "I am tasked with the following request:\n\n";

constexpr std::string_view kUserInstructions = R"(

Help me brainstorm how to respond to the user request by providing a list of True/False properties the solution may or may not have. Use the following step-by-step to come up with good properties:

1. If you were playing 20 questions, what's a good first question to ask that would split the possibilities in half?
   List at least 5 questions and their corresponding properties.
   Question: <Description>
2. Rewrite each question as a True/False property that's true for one half and false for the other.
   Question: <Description>
   True/False Property: <Property Description>
3. For each property, come up with an example that would satisfy the property.
   Property: <Description>
   Example: <Description>
   Is it a valid answer to the user's request? <Yes/No>
4. For each property, come up with an example that would not satisfy the property.
   Property: <Description>
   Example: <Description>
   Is it a valid answer to the user's request? <Yes/No>
5. Does the property mention a candidate answer in it?
   Property: <Description>
   Does the property mention a candidate answer in it? <Yes/No>
6. For each property, list whether we should include it or not in the final list of properties. Do not include ones where an example from above is not valid or if it mentions a candidate answer in it.
   Property: <Description>
   Include in final list? <Yes/No>

Final List of True/False Properties:
1. <Property Description 1>
2. <Property Description 2>

Ensure all properties are listed are sentences that are either True or False)";

// Matches "1. text", "2) text", "**3.** text".
const std::regex& numbered_item() {
  static const std::regex re(R"(^\s*(?:\*\*)?\d+[.)](?:\*\*)?\s+(.*\S)\s*$)");
  return re;
}

bool is_header_line(const std::string& line) {
  return text::to_lower(line).find(text::to_lower(kPropertyListHeader)) !=
         std::string::npos;
}

}  // namespace

const std::string_view kAutoStratExampleRequest = "Name a breed of dog";

const std::string_view kAutoStratExampleResponse = R"(1. Good first questions to split the possibilities in half:
Question: Is the breed large?
Question: Does the breed have a long coat?
Question: Was the breed originally developed in Europe?
Question: Was the breed developed for hunting or retrieving?
Question: Is the breed recognized by the American Kennel Club?
Question: Is the breed a terrier?

2. Rewriting each question as a True/False property:
Question: Is the breed large?
True/False Property: The breed typically weighs more than 50 pounds as an adult.
Question: Does the breed have a long coat?
True/False Property: The breed has a long coat.
Question: Was the breed originally developed in Europe?
True/False Property: The breed was originally developed in Europe.
Question: Was the breed developed for hunting or retrieving?
True/False Property: The breed was originally developed for hunting or retrieving.
Question: Is the breed recognized by the American Kennel Club?
True/False Property: The breed is recognized by the American Kennel Club.
Question: Is the breed a terrier?
True/False Property: The breed is a Yorkshire Terrier.

3. Examples that satisfy each property:
Property: The breed typically weighs more than 50 pounds as an adult.
Example: German Shepherd
Is it a valid answer to the user's request? Yes
Property: The breed has a long coat.
Example: Afghan Hound
Is it a valid answer to the user's request? Yes
Property: The breed was originally developed in Europe.
Example: Dachshund
Is it a valid answer to the user's request? Yes
Property: The breed was originally developed for hunting or retrieving.
Example: Labrador Retriever
Is it a valid answer to the user's request? Yes
Property: The breed is recognized by the American Kennel Club.
Example: Beagle
Is it a valid answer to the user's request? Yes
Property: The breed is a Yorkshire Terrier.
Example: Yorkshire Terrier
Is it a valid answer to the user's request? Yes

4. Examples that do not satisfy each property:
Property: The breed typically weighs more than 50 pounds as an adult.
Example: Chihuahua
Is it a valid answer to the user's request? Yes
Property: The breed has a long coat.
Example: Boxer
Is it a valid answer to the user's request? Yes
Property: The breed was originally developed in Europe.
Example: Shiba Inu
Is it a valid answer to the user's request? Yes
Property: The breed was originally developed for hunting or retrieving.
Example: Pug
Is it a valid answer to the user's request? Yes
Property: The breed is recognized by the American Kennel Club.
Example: Alapaha Blue Blood Bulldog
Is it a valid answer to the user's request? Yes
Property: The breed is a Yorkshire Terrier.
Example: Poodle
Is it a valid answer to the user's request? Yes

5. Does the property mention a candidate answer?
Property: The breed typically weighs more than 50 pounds as an adult.
Does the property mention a candidate answer in it? No
Property: The breed has a long coat.
Does the property mention a candidate answer in it? No
Property: The breed was originally developed in Europe.
Does the property mention a candidate answer in it? No
Property: The breed was originally developed for hunting or retrieving.
Does the property mention a candidate answer in it? No
Property: The breed is recognized by the American Kennel Club.
Does the property mention a candidate answer in it? No
Property: The breed is a Yorkshire Terrier.
Does the property mention a candidate answer in it? Yes

6. Include in the final list?
Property: The breed typically weighs more than 50 pounds as an adult.
Include in final list? Yes
Property: The breed has a long coat.
Include in final list? Yes
Property: The breed was originally developed in Europe.
Include in final list? Yes
Property: The breed was originally developed for hunting or retrieving.
Include in final list? Yes
Property: The breed is recognized by the American Kennel Club.
Include in final list? No (almost every commonly named breed is recognized, so it does not split the possibilities in half)
Property: The breed is a Yorkshire Terrier.
Include in final list? No (it mentions a candidate answer)

Final List of True/False Properties:
1. The breed typically weighs more than 50 pounds as an adult.
2. The breed has a long coat.
3. The breed was originally developed in Europe.
4. The breed was originally developed for hunting or retrieving.)";

std::string autostrat_user_message(std::string_view user_request) {
  std::string out;
  out.reserve(kUserPrefix.size() + user_request.size() +
              kUserInstructions.size());
  out.append(kUserPrefix);
  out.append(user_request);
  out.append(kUserInstructions);
  return out;
}

std::vector<ChatMessage> build_autostrat_prompt(std::string_view user_request) {
  if (text::is_blank(user_request)) {
    throw InvalidArgument("user request is empty");
  }
  return {
      {Role::kSystem, std::string(kAutoStratSystemPrompt)},
      {Role::kUser, autostrat_user_message(kAutoStratExampleRequest)},
      {Role::kAssistant, std::string(kAutoStratExampleResponse)},
      {Role::kUser, autostrat_user_message(user_request)},
  };
}

std::vector<PartitionProperty> parse_property_list(std::string_view raw) {
  const std::vector<std::string> lines = text::split_lines(raw);
  std::size_t header = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_header_line(lines[i])) header = i;
  }
  if (header == lines.size()) return {};

  std::vector<PartitionProperty> properties;
  std::smatch match;
  for (std::size_t i = header + 1; i < lines.size(); ++i) {
    if (std::regex_match(lines[i], match, numbered_item())) {
      std::string statement = text::trim(match[1].str());
      if (statement.empty()) continue;
      properties.push_back(make_property(
          "p" + std::to_string(properties.size() + 1), std::move(statement),
          PropertyOrigin::kAutoStratified));
    } else if (!text::is_blank(lines[i]) && !properties.empty()) {
      break;
    }
  }
  if (properties.empty()) throw ParseError("empty property list");
  return properties;
}

AutoStratTranscript run_auto_stratification(Backend& backend,
                                            std::string_view user_request,
                                            const StageOptions& options) {
  CompletionRequest request;
  request.model = options.model.empty() ? backend.model_id() : options.model;
  request.messages = build_autostrat_prompt(user_request);
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;
  request.seed = options.seed;

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    CompletionResponse response = backend.complete(request);
    try {
      std::vector<PartitionProperty> properties =
          parse_property_list(response.text);
      if (!properties.empty()) {
        return {std::string(user_request), std::move(response.text),
                std::move(properties)};
      }
      last_error = "no \"" + std::string(kPropertyListHeader) +
                   "\" header in model output";
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw ParseError("auto-stratification failed after retry: " + last_error);
}

}  // namespace stratsample

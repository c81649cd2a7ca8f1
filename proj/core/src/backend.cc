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

#include "stratsample/backend.h"

#include "stratsample/text.h"

namespace stratsample {

const char* to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

void validate(const CompletionRequest& request) {
  if (request.messages.empty()) {
    throw InvalidArgument("completion request has no messages");
  }
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
    throw InvalidArgument("temperature must be in [0, 2]");
  }
  if (request.max_tokens <= 0) {
    throw InvalidArgument("max_tokens must be positive");
  }
  for (const ChatMessage& message : request.messages) {
    if (message.role != Role::kAssistant && text::is_blank(message.content)) {
      throw InvalidArgument("system/user message content is empty");
    }
  }
}

double sum_logprobs(std::span<const TokenLogprob> tokens) {
  double total = 0.0;
  for (const TokenLogprob& t : tokens) total += t.logprob;
  return total;
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "http") return BackendKind::kHttp;
  if (name == "mock-scripted") return BackendKind::kMockScripted;
  if (name == "mock-categorical") return BackendKind::kMockCategorical;
  throw InvalidArgument("unknown backend kind: " + std::string(name));
}

std::shared_ptr<Backend> make_backend(const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendKind::kHttp: {
      if (spec.base_url.empty() || spec.model.empty()) {
        throw InvalidArgument("http backend needs --base-url and --model");
      }
      HttpBackendOptions options;
      options.base_url = spec.base_url;
      options.model = spec.model;
      options.enable_scoring = spec.enable_scoring;
      return std::make_shared<HttpBackend>(std::move(options));
    }
    case BackendKind::kMockScripted:
      return ScriptedMockBackend::from_file(spec.fixture);
    case BackendKind::kMockCategorical:
      return CategoricalMockBackend::from_file(spec.fixture);
  }
  throw InvalidArgument("unknown backend kind");
}

}  // namespace stratsample

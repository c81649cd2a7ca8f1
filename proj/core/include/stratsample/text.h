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

#ifndef STRATSAMPLE_TEXT_H_
#define STRATSAMPLE_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace stratsample::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);  // ASCII only
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool is_blank(std::string_view s);

// Lowercased, ASCII punctuation removed, whitespace collapsed. Used to match
// statements a model echoes back against the originals.
std::string fold_for_match(std::string_view s);

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

}  // namespace stratsample::text

#endif  // STRATSAMPLE_TEXT_H_

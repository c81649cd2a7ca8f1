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

#ifndef STRATSAMPLE_COVERAGEQA_H_
#define STRATSAMPLE_COVERAGEQA_H_

// CoverageQA-style question generation. Starting from a seed
// (property, value) pair, constraints are added one at a time over a local
// triple store; every constraint set whose answer set has between
// min_answers and max_answers items becomes a candidate question.

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stratsample/autostrat.h"
#include "stratsample/backend.h"
#include "stratsample/eval.h"

namespace stratsample {

struct Triple {
  std::string item;
  std::string property;
  std::string value;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

using PropertyValue = std::pair<std::string, std::string>;
using ConstraintSet = std::vector<PropertyValue>;

class KnowledgeBase {
 public:
  // Throws InvalidArgument on a blank field. Duplicates are ignored.
  void add(Triple triple);

  const std::set<std::string>& items_with(const PropertyValue& pair) const;
  const std::set<PropertyValue>& pairs_of(const std::string& item) const;
  const std::set<std::string>& items() const { return items_; }
  std::size_t triple_count() const { return triples_.size(); }
  bool has_property(const std::string& property) const;

 private:
  std::set<Triple> triples_;
  std::set<std::string> items_;
  std::map<PropertyValue, std::set<std::string>> by_pair_;
  std::map<std::string, std::set<PropertyValue>> by_item_;
};

// UTF-8 lines "item<TAB>property<TAB>value". Blank lines and lines starting
// with '#' are skipped; anything else without exactly three nonempty fields
// is a ParseError naming the line number.
KnowledgeBase parse_kb(std::istream& in, std::string_view source = "<input>");
KnowledgeBase load_kb(const std::filesystem::path& path);

// Items holding every (property, value) in the constraint set.
std::set<std::string> answer_set(const KnowledgeBase& kb,
                                 const ConstraintSet& constraints);

struct SearchOptions {
  std::size_t min_answers = 20;
  std::size_t max_answers = 40;
  std::size_t max_depth = 3;
  std::set<std::string> blacklist;  // properties never used as constraints
};

struct GeneratedQuestion {
  ConstraintSet constraints;
  std::set<std::string> answers;
  std::optional<std::string> question_text;
};

// Depth-first search from the seed. A node is emitted when its answer count
// is within bounds; a branch is cut when the count drops below min_answers
// or the depth reaches max_depth. Extensions come only from pairs held by a
// current answer and are added in increasing order, so each constraint
// subset is visited once. Output is deduplicated by answer set.
std::vector<GeneratedQuestion> recursive_search(const KnowledgeBase& kb,
                                                const PropertyValue& seed,
                                                const SearchOptions& options);

// One property per line; '#' starts a comment.
std::set<std::string> load_blacklist(const std::filesystem::path& path);

std::string describe_constraints(const ConstraintSet& constraints);

// Asks the backend to phrase the constraints as a question requesting one
// example; returns the first nonempty line. Retries once on blank output.
std::string to_question(Backend& backend, const ConstraintSet& constraints,
                        const StageOptions& options = {});

// ---------------------------------------------------------------------------
// Dataset files:
// {"questions": [{"id", "question", "domain",
//                 "answers": [{"canonical", "aliases": [...]}]}]}

std::vector<QuestionRecord> to_records(
    const std::vector<GeneratedQuestion>& questions, std::string_view domain);

std::string dataset_to_string(const std::vector<QuestionRecord>& questions);
// Throws ParseError with the offending field path, e.g.
// "questions[2].answers[0].aliases[1]: duplicate alias".
std::vector<QuestionRecord> parse_dataset(std::string_view text);

// Throws InvalidArgument if a question has no answers.
void write_dataset(const std::vector<QuestionRecord>& questions,
                   const std::filesystem::path& path);
std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path);

}  // namespace stratsample

#endif  // STRATSAMPLE_COVERAGEQA_H_

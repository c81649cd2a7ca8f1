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

#include "stratsample/coverageqa.h"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "stratsample/text.h"

namespace stratsample {
namespace {

const std::set<std::string>& empty_items() {
  static const std::set<std::string> empty;
  return empty;
}

const std::set<PropertyValue>& empty_pairs() {
  static const std::set<PropertyValue> empty;
  return empty;
}

class Search {
 public:
  Search(const KnowledgeBase& kb, const SearchOptions& options)
      : kb_(kb), options_(options) {}

  void visit(ConstraintSet& constraints, const std::set<std::string>& answers) {
    if (answers.size() < options_.min_answers) return;
    if (answers.size() <= options_.max_answers &&
        seen_.insert(answers).second) {
      out_.push_back({constraints, answers, std::nullopt});
    }
    if (constraints.size() >= options_.max_depth) return;

    std::set<PropertyValue> candidates;
    for (const std::string& item : answers) {
      const auto& pairs = kb_.pairs_of(item);
      candidates.insert(pairs.begin(), pairs.end());
    }
    const PropertyValue* last =
        constraints.size() > 1 ? &constraints.back() : nullptr;
    for (const PropertyValue& pair : candidates) {
      if (last != nullptr && !(*last < pair)) continue;
      if (options_.blacklist.contains(pair.first)) continue;
      if (std::find(constraints.begin(), constraints.end(), pair) !=
          constraints.end()) {
        continue;
      }
      std::set<std::string> narrowed;
      const auto& holders = kb_.items_with(pair);
      std::set_intersection(answers.begin(), answers.end(), holders.begin(),
                            holders.end(),
                            std::inserter(narrowed, narrowed.end()));
      // A pair every current answer holds leaves the set unchanged; the same
      // answer set is reachable without it at a smaller depth.
      if (narrowed.size() == answers.size()) continue;
      constraints.push_back(pair);
      visit(constraints, narrowed);
      constraints.pop_back();
    }
  }

  std::vector<GeneratedQuestion> take() { return std::move(out_); }

 private:
  const KnowledgeBase& kb_;
  const SearchOptions& options_;
  std::set<std::set<std::string>> seen_;
  std::vector<GeneratedQuestion> out_;
};

}  // namespace

void KnowledgeBase::add(Triple triple) {
  if (text::is_blank(triple.item) || text::is_blank(triple.property) ||
      text::is_blank(triple.value)) {
    throw InvalidArgument("triple fields must be nonempty");
  }
  if (!triples_.insert(triple).second) return;
  PropertyValue pair{triple.property, triple.value};
  items_.insert(triple.item);
  by_pair_[pair].insert(triple.item);
  by_item_[triple.item].insert(std::move(pair));
}

const std::set<std::string>& KnowledgeBase::items_with(
    const PropertyValue& pair) const {
  auto it = by_pair_.find(pair);
  return it == by_pair_.end() ? empty_items() : it->second;
}

const std::set<PropertyValue>& KnowledgeBase::pairs_of(
    const std::string& item) const {
  auto it = by_item_.find(item);
  return it == by_item_.end() ? empty_pairs() : it->second;
}

bool KnowledgeBase::has_property(const std::string& property) const {
  auto it = by_pair_.lower_bound({property, std::string()});
  return it != by_pair_.end() && it->first.first == property;
}

KnowledgeBase parse_kb(std::istream& in, std::string_view source) {
  KnowledgeBase kb;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line) || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos;
         start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    const bool blank_field =
        std::any_of(fields.begin(), fields.end(),
                    [](const std::string& f) { return text::is_blank(f); });
    if (fields.size() != 3 || blank_field) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_number) +
                       ": expected item<TAB>property<TAB>value, got " +
                       std::to_string(fields.size()) + " field(s)");
    }
    kb.add({text::trim(fields[0]), text::trim(fields[1]), text::trim(fields[2])});
  }
  return kb;
}

KnowledgeBase load_kb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open knowledge base " + path.string());
  return parse_kb(in, path.string());
}

std::set<std::string> answer_set(const KnowledgeBase& kb,
                                 const ConstraintSet& constraints) {
  if (constraints.empty()) {
    throw InvalidArgument("answer_set needs at least one constraint");
  }
  std::vector<const std::set<std::string>*> sets;
  for (const PropertyValue& pair : constraints) {
    sets.push_back(&kb.items_with(pair));
  }
  std::sort(sets.begin(), sets.end(),
            [](auto* a, auto* b) { return a->size() < b->size(); });
  std::set<std::string> result = *sets.front();
  for (std::size_t i = 1; i < sets.size() && !result.empty(); ++i) {
    std::set<std::string> narrowed;
    std::set_intersection(result.begin(), result.end(), sets[i]->begin(),
                          sets[i]->end(),
                          std::inserter(narrowed, narrowed.end()));
    result = std::move(narrowed);
  }
  return result;
}

std::vector<GeneratedQuestion> recursive_search(const KnowledgeBase& kb,
                                                const PropertyValue& seed,
                                                const SearchOptions& options) {
  if (options.blacklist.contains(seed.first)) {
    throw InvalidArgument("seed property '" + seed.first + "' is blacklisted");
  }
  if (options.min_answers > options.max_answers) {
    throw InvalidArgument("min_answers exceeds max_answers");
  }
  if (options.max_depth == 0) throw InvalidArgument("max_depth must be >= 1");

  Search search(kb, options);
  ConstraintSet constraints{seed};
  search.visit(constraints, answer_set(kb, constraints));
  return search.take();
}

std::set<std::string> load_blacklist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open blacklist " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::string property = text::trim(line);
    if (!property.empty()) out.insert(std::move(property));
  }
  return out;
}

std::string describe_constraints(const ConstraintSet& constraints) {
  std::string out;
  for (const auto& [property, value] : constraints) {
    out += "- " + property + ": " + value + "\n";
  }
  return out;
}

std::string to_question(Backend& backend, const ConstraintSet& constraints,
                        const StageOptions& options) {
  if (constraints.empty()) {
    throw InvalidArgument("to_question needs at least one constraint");
  }
  CompletionRequest request;
  request.model = options.model.empty() ? backend.model_id() : options.model;
  request.temperature = options.temperature;
  request.max_tokens = 128;
  request.seed = options.seed;
  request.messages = {
      {Role::kSystem,
       "You write short, natural quiz questions from structured knowledge-base "
       "constraints."},
      {Role::kUser,
       "Convert the following constraints into a single natural-language "
       "question that asks for ONE example satisfying all of them. Reply with "
       "the question only.\n\nConstraints:\n" +
           describe_constraints(constraints)},
  };
  for (int attempt = 0; attempt < 2; ++attempt) {
    const CompletionResponse response = backend.complete(request);
    for (const std::string& line : text::split_lines(response.text)) {
      if (!text::is_blank(line)) return text::trim(line);
    }
  }
  throw ParseError("model returned no question text after retry");
}

}  // namespace stratsample

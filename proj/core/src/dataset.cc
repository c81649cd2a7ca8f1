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

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stratsample/coverageqa.h"
#include "stratsample/text.h"

namespace stratsample {
namespace {

using nlohmann::ordered_json;

const ordered_json& require(const ordered_json& node, const char* field,
                            const std::string& path) {
  if (!node.is_object() || !node.contains(field)) {
    throw ParseError(path + ": missing field \"" + field + "\"");
  }
  return node[field];
}

std::string require_string(const ordered_json& node, const char* field,
                           const std::string& path) {
  const ordered_json& value = require(node, field, path);
  if (!value.is_string()) {
    throw ParseError(path + "." + field + ": expected a string");
  }
  return value.get<std::string>();
}

}  // namespace

std::vector<QuestionRecord> to_records(
    const std::vector<GeneratedQuestion>& questions, std::string_view domain) {
  std::vector<QuestionRecord> records;
  records.reserve(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "q%04zu", i + 1);
    QuestionRecord record;
    record.id = id;
    record.domain = std::string(domain);
    record.question = questions[i].question_text.value_or(
        "Name an item with: " +
        text::collapse_whitespace(
            describe_constraints(questions[i].constraints)));
    for (const std::string& item : questions[i].answers) {
      record.answers.push_back({item, {}});
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string dataset_to_string(const std::vector<QuestionRecord>& questions) {
  ordered_json list = ordered_json::array();
  for (const QuestionRecord& q : questions) {
    if (q.answers.empty()) {
      throw InvalidArgument("question " + q.id + " has no answers");
    }
    ordered_json answers = ordered_json::array();
    for (const AnswerEntry& a : q.answers) {
      answers.push_back({{"canonical", a.canonical}, {"aliases", a.aliases}});
    }
    list.push_back({{"id", q.id},
                    {"question", q.question},
                    {"domain", q.domain},
                    {"answers", std::move(answers)}});
  }
  ordered_json doc = {{"questions", std::move(list)}};
  return doc.dump(2) + "\n";
}

std::vector<QuestionRecord> parse_dataset(std::string_view text_in) {
  const ordered_json doc = ordered_json::parse(text_in, nullptr, false);
  if (doc.is_discarded()) throw ParseError("dataset is not valid JSON");
  const ordered_json& list = require(doc, "questions", "$");
  if (!list.is_array()) throw ParseError("questions: expected an array");

  std::vector<QuestionRecord> records;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "questions[" + std::to_string(i) + "]";
    const ordered_json& node = list[i];
    QuestionRecord record;
    record.id = require_string(node, "id", path);
    record.question = require_string(node, "question", path);
    record.domain = node.contains("domain") && node["domain"].is_string()
                        ? node["domain"].get<std::string>()
                        : std::string();
    const ordered_json& answers = require(node, "answers", path);
    if (!answers.is_array()) {
      throw ParseError(path + ".answers: expected an array");
    }
    if (answers.size() < 2) {
      throw ParseError(path + ".answers: need at least two answers");
    }

    std::set<std::string> seen;
    for (std::size_t j = 0; j < answers.size(); ++j) {
      const std::string apath = path + ".answers[" + std::to_string(j) + "]";
      AnswerEntry entry;
      entry.canonical = require_string(answers[j], "canonical", apath);
      if (!seen.insert(normalize_answer(entry.canonical)).second) {
        throw ParseError(apath + ".canonical: duplicate answer");
      }
      if (answers[j].contains("aliases")) {
        const ordered_json& aliases = answers[j]["aliases"];
        if (!aliases.is_array()) {
          throw ParseError(apath + ".aliases: expected an array");
        }
        for (std::size_t k = 0; k < aliases.size(); ++k) {
          const std::string kpath =
              apath + ".aliases[" + std::to_string(k) + "]";
          if (!aliases[k].is_string()) {
            throw ParseError(kpath + ": expected a string");
          }
          std::string alias = aliases[k].get<std::string>();
          if (!seen.insert(normalize_answer(alias)).second) {
            throw ParseError(kpath + ": duplicate alias");
          }
          entry.aliases.push_back(std::move(alias));
        }
      }
      record.answers.push_back(std::move(entry));
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_dataset(const std::vector<QuestionRecord>& questions,
                   const std::filesystem::path& path) {
  const std::string body = dataset_to_string(questions);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write dataset " + path.string());
  out << body;
}

std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

}  // namespace stratsample

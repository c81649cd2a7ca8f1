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

#include "cli.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "stratsample/coverageqa.h"
#include "test_util.h"

namespace stratsample::cli {
namespace {

using testing::fixture;
using testing::read_file;
using testing::TempDir;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> with_mock(const TempDir& cache,
                                   std::vector<std::string> args) {
  std::vector<std::string> full{"--backend", "mock-categorical", "--fixture",
                                fixture("mock_pipeline.json").string(),
                                "--cache-dir", cache.path().string()};
  full.insert(full.end(), args.begin(), args.end());
  return full;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

constexpr const char* kLakes = "Name one of the Great Lakes of North America.";

TEST(Cli, StratifyScripted) {
  TempDir cache("cli");
  const auto r = invoke({"--backend", "mock-scripted", "--fixture",
                         fixture("scripted_us_states.json").string(), "--no-cache",
                         "stratify", "Name a US state."});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out,
            "1. The state is east of the Mississippi River\n"
            "2. The state is south of the Missouri Compromise line\n");
}

TEST(Cli, StratifyParseFailureIsNonzero) {
  const auto r = invoke({"--backend", "mock-scripted", "--fixture",
                         fixture("scripted_no_header.json").string(), "--no-cache",
                         "stratify", "Name a US state."});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, StratifySecondRunHitsCache) {
  TempDir cache("cli-cache");
  const auto first = invoke(with_mock(cache, {"stratify", kLakes}));
  ASSERT_EQ(first.code, kExitOk) << first.err;
  EXPECT_EQ(first.err.find("cache hit"), std::string::npos);
  const auto second = invoke(with_mock(cache, {"stratify", kLakes}));
  EXPECT_EQ(second.code, kExitOk);
  EXPECT_NE(second.err.find("cache hit"), std::string::npos);
  EXPECT_EQ(first.out, second.out);
}

TEST(Cli, EstimatePrintsJoint) {
  TempDir cache("cli-est");
  const auto r = invoke(with_mock(cache, {"estimate", kLakes}));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("joint: TT="), std::string::npos);
}

TEST(Cli, SampleIsDeterministicPerSeed) {
  TempDir cache("cli-sample");
  const auto a = invoke(with_mock(cache, {"--seed", "3", "sample", kLakes, "-n", "25"}));
  const auto b = invoke(with_mock(cache, {"--seed", "3", "sample", kLakes, "-n", "25"}));
  const auto c = invoke(with_mock(cache, {"--seed", "4", "sample", kLakes, "-n", "25"}));
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(count_lines(a.out), 25u);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(a.out.substr(0, 2), "1\t");
}

TEST(Cli, NoCacheWritesNothing) {
  TempDir cache("cli-nocache");
  const auto r =
      invoke(with_mock(cache, {"--no-cache", "sample", kLakes, "-n", "3"}));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::is_empty(cache.path()));
}

TEST(Cli, SampleReportsFallbacks) {
  // Noble gases: one stratum of the mock is empty, and with zero retries
  // every Invalid reply falls straight back to the unaugmented prompt.
  TempDir cache("cli-fallback");
  const auto r = invoke(with_mock(cache, {"--max-invalid-retries", "0", "sample",
                                          "Name a noble gas.", "-n", "200"}));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("fallback: sample "), std::string::npos);
}

TEST(Cli, EvalWritesCsvAndJson) {
  TempDir cache("cli-eval");
  const auto csv = cache.path() / "r.csv";
  const auto json_path = cache.path() / "r.json";
  const auto r = invoke(with_mock(
      cache, {"--temperature", "0.5", "eval", "--dataset",
              fixture("dataset_small.json").string(), "--samples", "10",
              "--out-csv", csv.string(), "--out-json", json_path.string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string text = read_file(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "id,temp,method,recall,precision,f1,kl_nats,invalid_mass");
  EXPECT_EQ(count_lines(text), 1u + 3u * 2u);  // one temperature, two methods
  EXPECT_NE(text.find(",baseline,"), std::string::npos);
  EXPECT_NE(text.find(",simplestrat,"), std::string::npos);
  EXPECT_EQ(text.find(",1,"), std::string::npos);  // default 1.0 replaced
  EXPECT_NO_THROW(nlohmann::json::parse(read_file(json_path)));
}

TEST(Cli, EvalSingleMethod) {
  TempDir cache("cli-eval-m");
  const auto csv = cache.path() / "r.csv";
  const auto r = invoke(with_mock(
      cache, {"eval", "--dataset", fixture("dataset_small.json").string(),
              "--samples", "5", "--methods", "baseline", "--out-csv", csv.string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_file(csv).find("simplestrat"), std::string::npos);
}

TEST(Cli, EvalWithoutDatasetIsUsageError) {
  TempDir cache("cli-usage");
  EXPECT_EQ(invoke(with_mock(cache, {"eval"})).code, kExitUsage);
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, ConfigFileSuppliesDefaultsAndFlagsWin) {
  TempDir dir("cli-config");
  const auto config = dir.path() / "s.toml";
  std::ofstream(config) << "backend = \"mock-categorical\"\n"
                        << "fixture = \"" << fixture("mock_pipeline.json").string()
                        << "\"\nno-cache = true\nseed = 3\n";
  const auto a = invoke({"--config", config.string(), "sample", kLakes, "-n", "10"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  TempDir cache("cli-config-ref");
  const auto b = invoke(with_mock(cache, {"--seed", "3", "sample", kLakes, "-n", "10"}));
  EXPECT_EQ(a.out, b.out);
  const auto c = invoke(
      {"--config", config.string(), "--seed", "4", "sample", kLakes, "-n", "10"});
  EXPECT_NE(a.out, c.out);
}

TEST(Cli, GenDatasetRespectsBounds) {
  TempDir dir("cli-gen");
  const auto out = dir.path() / "d.json";
  const auto r = invoke({"gen-dataset", fixture("kb_200.tsv").string(),
                         "--seed-pair", "instance of=city", "--blacklist",
                         fixture("blacklist.txt").string(), "--out-json",
                         out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto records = load_dataset(out);
  ASSERT_FALSE(records.empty());
  for (const auto& q : records) {
    EXPECT_GE(q.answers.size(), 20u);
    EXPECT_LE(q.answers.size(), 40u);
  }
}

TEST(Cli, GenDatasetMinMaxOverride) {
  TempDir dir("cli-gen2");
  const auto r = invoke({"gen-dataset", fixture("kb_200.tsv").string(),
                         "--seed-pair", "instance of=city", "--blacklist",
                         fixture("blacklist.txt").string(), "--min", "5", "--max",
                         "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const auto& q : parse_dataset(r.out)) {
    EXPECT_GE(q.answers.size(), 5u);
    EXPECT_LE(q.answers.size(), 10u);
  }
}

TEST(Cli, GenDatasetBlacklistedSeed) {
  const auto r = invoke({"gen-dataset", fixture("kb_200.tsv").string(),
                         "--seed-pair", "population=1000", "--blacklist",
                         fixture("blacklist.txt").string()});
  EXPECT_NE(r.code, kExitOk);
  EXPECT_NE(r.err.find("blacklisted"), std::string::npos);
}

TEST(Cli, ReportSummarizesEvalJson) {
  TempDir cache("cli-report");
  const auto json_path = cache.path() / "r.json";
  ASSERT_EQ(invoke(with_mock(cache, {"eval", "--dataset",
                                     fixture("dataset_small.json").string(),
                                     "--samples", "5", "--out-json",
                                     json_path.string()}))
                .code,
            kExitOk);
  const auto r = invoke({"report", json_path.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("simplestrat"), std::string::npos);
}

}  // namespace
}  // namespace stratsample::cli

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

#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "stratsample/core.h"
#include "stratsample/coverageqa.h"
#include "stratsample/eval.h"
#include "stratsample/random.h"

namespace stratsample {
namespace {

std::vector<MarginalEstimate> marginals(std::size_t m) {
  std::vector<MarginalEstimate> out;
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back({make_property("p" + std::to_string(i), "statement",
                                 PropertyOrigin::kUserSupplied),
                   0.3 + 0.2 * static_cast<double>(i)});
  }
  return out;
}

void BM_BuildJoint(benchmark::State& state) {
  const auto ms = marginals(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_joint(ms));
}
BENCHMARK(BM_BuildJoint)->DenseRange(1, 3);

void BM_SampleStratum(benchmark::State& state) {
  const auto joint = build_joint(marginals(static_cast<std::size_t>(state.range(0))));
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_stratum(joint, rng));
}
BENCHMARK(BM_SampleStratum)->DenseRange(1, 3);

void BM_KlFromUniform(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  QuestionRecord record{"q", "q", {}, ""};
  ResponseDistribution dist;
  for (std::size_t i = 0; i < n; ++i) {
    record.answers.push_back({"a" + std::to_string(i), {}});
    dist.probs.emplace_back("a" + std::to_string(i), 1.0 / static_cast<double>(n));
  }
  for (auto _ : state) benchmark::DoNotOptimize(kl_from_uniform(dist, record));
}
BENCHMARK(BM_KlFromUniform)->Arg(10)->Arg(100);

void BM_RecursiveSearch(benchmark::State& state) {
  const auto kb = load_kb(std::string(STRATSAMPLE_FIXTURE_DIR) + "/kb_200.tsv");
  SearchOptions options;
  options.blacklist = {"database id", "population"};
  for (auto _ : state) {
    benchmark::DoNotOptimize(recursive_search(kb, {"instance of", "city"}, options));
  }
}
BENCHMARK(BM_RecursiveSearch)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace stratsample

BENCHMARK_MAIN();

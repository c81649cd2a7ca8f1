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

#include "stratsample/core.h"

#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "stratsample/error.h"

namespace stratsample {
namespace {

MarginalEstimate marginal(double p, const std::string& id = "p") {
  return {make_property(id, "statement " + id, PropertyOrigin::kUserSupplied), p};
}

std::vector<MarginalEstimate> marginals(std::initializer_list<double> ps) {
  std::vector<MarginalEstimate> out;
  int i = 0;
  for (double p : ps) out.push_back(marginal(p, "p" + std::to_string(++i)));
  return out;
}

// Independent oracle: recursive product over label choices, keyed by the
// "TF.." string, not through enumerate_strata().
void oracle_joint(const std::vector<double>& ps, std::size_t i,
                  std::string labels, double p,
                  std::map<std::string, double>& out) {
  if (i == ps.size()) {
    out[labels] = p;
    return;
  }
  oracle_joint(ps, i + 1, labels + "T", p * ps[i], out);
  oracle_joint(ps, i + 1, labels + "F", p * (1.0 - ps[i]), out);
}

std::string expect_error(auto&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "<no error>";
}

TEST(Imbalance, SingleLabelExtreme) {
  EXPECT_EQ(imbalance({{"a", true}, {"b", true}, {"c", true}, {"d", true}}), 4u);
}

TEST(Imbalance, PerfectBalance) {
  EXPECT_EQ(imbalance({{"a", true}, {"b", true}, {"c", false}, {"d", false}}),
            0u);
}

TEST(Imbalance, ThreeVersusOne) {
  EXPECT_EQ(imbalance({{"a", true}, {"b", true}, {"c", true}, {"d", false}}),
            2u);
}

TEST(Imbalance, EmptyPartitionIsAnError) {
  EXPECT_EQ(expect_error([] { imbalance({}); }), "empty partition");
}

TEST(Imbalance, InvariantUnderRelabelingAndLabelSwap) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 20);
    std::vector<bool> labels;
    for (int i = 0; i < n; ++i) labels.push_back(gen() & 1);

    std::map<std::string, bool> original, renamed, swapped;
    for (int i = 0; i < n; ++i) {
      original["s" + std::to_string(i)] = labels[i];
      renamed["other" + std::to_string(n - i)] = labels[i];
      swapped["s" + std::to_string(i)] = !labels[i];
    }
    EXPECT_EQ(imbalance(original), imbalance(renamed));
    EXPECT_EQ(imbalance(original), imbalance(swapped));
  }
}

TEST(BuildJoint, SingleBalancedProperty) {
  const auto joint = build_joint(marginals({0.5}));
  ASSERT_EQ(joint.size(), 2u);
  EXPECT_DOUBLE_EQ(joint.probability(Stratum::from_string("T")), 0.5);
  EXPECT_DOUBLE_EQ(joint.probability(Stratum::from_string("F")), 0.5);
}

TEST(BuildJoint, TwoBalancedPropertiesAreUniform) {
  const auto joint = build_joint(marginals({0.5, 0.5}));
  ASSERT_EQ(joint.size(), 4u);
  for (const auto& [stratum, p] : joint.entries()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(BuildJoint, MatchesHandMultiplication) {
  // 0.7*0.4, 0.7*0.6, 0.3*0.4, 0.3*0.6
  const auto joint = build_joint(marginals({0.7, 0.4}));
  EXPECT_NEAR(joint.probability(Stratum::from_string("TT")), 0.28, 1e-15);
  EXPECT_NEAR(joint.probability(Stratum::from_string("TF")), 0.42, 1e-15);
  EXPECT_NEAR(joint.probability(Stratum::from_string("FT")), 0.12, 1e-15);
  EXPECT_NEAR(joint.probability(Stratum::from_string("FF")), 0.18, 1e-15);
}

TEST(BuildJoint, EntriesAreInCanonicalOrder) {
  const auto joint = build_joint(marginals({0.1, 0.2, 0.3}));
  std::vector<std::string> order;
  for (const auto& [stratum, p] : joint.entries()) order.push_back(stratum.to_string());
  EXPECT_EQ(order, (std::vector<std::string>{"TTT", "TTF", "TFT", "TFF", "FTT",
                                             "FTF", "FFT", "FFF"}));
}

TEST(BuildJoint, PropertyCountOutOfRange) {
  EXPECT_EQ(expect_error([] { build_joint({}); }), "property count out of range");
  const auto four = marginals({0.5, 0.5, 0.5, 0.5});
  EXPECT_EQ(expect_error([&] { build_joint(four); }),
            "property count out of range");
}

TEST(BuildJoint, RejectsProbabilityOutsideUnitInterval) {
  const auto bad = marginals({1.2});
  EXPECT_THROW(build_joint(bad), InvalidArgument);
}

TEST(BuildJoint, RandomMarginalsMatchOracleAndSumToOne) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + gen() % 3;
    std::vector<double> ps;
    std::vector<MarginalEstimate> ms;
    for (std::size_t i = 0; i < m; ++i) {
      ps.push_back(unit(gen));
      ms.push_back(marginal(ps.back(), "p" + std::to_string(i)));
    }
    std::map<std::string, double> expected;
    oracle_joint(ps, 0, "", 1.0, expected);

    const auto joint = build_joint(ms);
    ASSERT_EQ(joint.size(), expected.size());
    double sum = 0.0;
    for (const auto& [stratum, p] : joint.entries()) {
      EXPECT_NEAR(p, expected.at(stratum.to_string()), 1e-12);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(BuildJoint, CertainPropertyZeroesItsFalseStrata) {
  const auto joint = build_joint(marginals({0.3, 1.0, 0.8}));
  for (const auto& [stratum, p] : joint.entries()) {
    if (!stratum[1]) EXPECT_EQ(p, 0.0) << stratum.to_string();
  }
}

TEST(Normalize, SymmetricRescale) {
  const std::vector<double> w{0.6, 0.6};
  EXPECT_EQ(normalize(w), (std::vector<double>{0.5, 0.5}));
}

TEST(Normalize, AlreadyNormalized) {
  const std::vector<double> w{1.0, 0.0};
  EXPECT_EQ(normalize(w), (std::vector<double>{1.0, 0.0}));
}

TEST(Normalize, Division) {
  const std::vector<double> w{2, 3, 5};
  const auto p = normalize(w);
  EXPECT_NEAR(p[0], 0.2, 1e-15);
  EXPECT_NEAR(p[1], 0.3, 1e-15);
  EXPECT_NEAR(p[2], 0.5, 1e-15);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
}

TEST(Normalize, DegenerateAndNegativeWeights) {
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_EQ(expect_error([&] { normalize(zeros); }), "degenerate weights");
  const std::vector<double> negative{1.0, -0.5};
  EXPECT_THROW(normalize(negative), InvalidArgument);
}

TEST(JointDistribution, RejectsIncompleteOrUnnormalizedEntries) {
  using E = JointDistribution::Entry;
  EXPECT_THROW(JointDistribution({E{Stratum::from_string("T"), 1.0}}),
               InvalidArgument);
  EXPECT_THROW(JointDistribution({E{Stratum::from_string("T"), 0.6},
                                  E{Stratum::from_string("F"), 0.6}}),
               InvalidArgument);
  EXPECT_THROW(JointDistribution({E{Stratum::from_string("T"), 1.5},
                                  E{Stratum::from_string("F"), -0.5}}),
               InvalidArgument);
  EXPECT_NO_THROW(JointDistribution({E{Stratum::from_string("F"), 0.25},
                                     E{Stratum::from_string("T"), 0.75}}));
}

TEST(SampleStratum, DegenerateDistribution) {
  const auto joint = build_joint(marginals({1.0}));
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(sample_stratum(joint, rng).to_string(), "T");
  }
}

TEST(SampleStratum, SameSeedSameSequence) {
  const auto joint = build_joint(marginals({0.7, 0.4}));
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_stratum(joint, a), sample_stratum(joint, b));
  }
}

TEST(SampleStratum, UniformFrequenciesWithinTolerance) {
  const auto joint = build_joint(marginals({0.5, 0.5}));
  Rng rng(1234);
  std::map<std::string, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[sample_stratum(joint, rng).to_string()];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [label, count] : counts) {
    EXPECT_NEAR(count / double(n), 0.25, 0.02) << label;
  }
}

TEST(SampleStratum, ConvergesWithinConcentrationBound) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 100000;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = 1 + trial % 3;
    std::vector<MarginalEstimate> ms;
    for (std::size_t i = 0; i < m; ++i) ms.push_back(marginal(unit(gen)));
    const auto joint = build_joint(ms);

    Rng rng(trial);
    std::map<Stratum, int> counts;
    for (int i = 0; i < n; ++i) ++counts[sample_stratum(joint, rng)];
    const double bound =
        2.0 * 3.0 * std::sqrt(std::log(2.0 * std::pow(2.0, m)) / (2.0 * n));
    for (const auto& [stratum, p] : joint.entries()) {
      EXPECT_LE(std::abs(counts[stratum] / double(n) - p), bound);
    }
  }
}

TEST(Stratum, StringRoundTrip) {
  for (const Stratum& s : enumerate_strata(3)) {
    EXPECT_EQ(Stratum::from_string(s.to_string()), s);
  }
  EXPECT_THROW(Stratum::from_string("TX"), InvalidArgument);
}

TEST(PartitionProperty, BlankStatementRejected) {
  EXPECT_THROW(make_property("p", "  \n", PropertyOrigin::kAutoStratified),
               InvalidArgument);
}

TEST(WeightedStratification, JointEqualsProductOfMarginals) {
  const WeightedStratification w(marginals({0.7, 0.4}));
  EXPECT_EQ(w.property_count(), 2u);
  EXPECT_NEAR(w.joint().probability(Stratum::from_string("TF")), 0.42, 1e-12);
  EXPECT_EQ(w.properties()[1].id, "p2");
}

}  // namespace
}  // namespace stratsample

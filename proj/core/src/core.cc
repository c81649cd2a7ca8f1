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
#include <cstdlib>
#include <numeric>

#include "stratsample/error.h"

namespace stratsample {

const char* to_string(PropertyOrigin origin) {
  switch (origin) {
    case PropertyOrigin::kAutoStratified:
      return "auto-stratified";
    case PropertyOrigin::kUserSupplied:
      return "user-supplied";
  }
  return "auto-stratified";
}

PropertyOrigin property_origin_from_string(const std::string& text) {
  if (text == "auto-stratified") return PropertyOrigin::kAutoStratified;
  if (text == "user-supplied") return PropertyOrigin::kUserSupplied;
  throw InvalidArgument("unknown property origin: " + text);
}

PartitionProperty make_property(std::string id, std::string statement,
                                PropertyOrigin origin) {
  if (statement.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw InvalidArgument("property statement is empty");
  }
  return PartitionProperty{std::move(id), std::move(statement), origin};
}

std::string Stratum::to_string() const {
  std::string out;
  out.reserve(labels_.size());
  for (bool label : labels_) out.push_back(label ? 'T' : 'F');
  return out;
}

Stratum Stratum::from_string(const std::string& text) {
  std::vector<bool> labels;
  labels.reserve(text.size());
  for (char c : text) {
    if (c == 'T') {
      labels.push_back(true);
    } else if (c == 'F') {
      labels.push_back(false);
    } else {
      throw InvalidArgument("bad stratum label string: " + text);
    }
  }
  return Stratum(std::move(labels));
}

std::vector<Stratum> enumerate_strata(std::size_t property_count) {
  const std::size_t n = std::size_t{1} << property_count;
  std::vector<Stratum> strata;
  strata.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<bool> labels(property_count);
    for (std::size_t i = 0; i < property_count; ++i) {
      // Bit (m-1-i) of k set means property i is false.
      labels[i] = ((k >> (property_count - 1 - i)) & 1U) == 0;
    }
    strata.emplace_back(std::move(labels));
  }
  return strata;
}

JointDistribution::JointDistribution(std::vector<Entry> entries) {
  if (entries.empty()) throw InvalidArgument("joint distribution is empty");
  const std::size_t m = entries.front().first.size();
  if (m > kMaxProperties) {
    throw InvalidArgument("property count out of range");
  }
  const std::vector<Stratum> expected = enumerate_strata(m);
  if (entries.size() != expected.size()) {
    throw InvalidArgument("joint distribution must have exactly 2^m entries");
  }

  // Reorder into canonical order; duplicates or foreign keys are rejected.
  std::vector<Entry> ordered;
  ordered.reserve(expected.size());
  for (const Stratum& stratum : expected) {
    const Entry* found = nullptr;
    for (const Entry& entry : entries) {
      if (entry.first == stratum) {
        if (found != nullptr) {
          throw InvalidArgument("duplicate stratum " + stratum.to_string());
        }
        found = &entry;
      }
    }
    if (found == nullptr) {
      throw InvalidArgument("missing stratum " + stratum.to_string());
    }
    ordered.push_back(*found);
  }

  double sum = 0.0;
  for (const Entry& entry : ordered) {
    if (!std::isfinite(entry.second) || entry.second < 0.0) {
      throw InvalidArgument("negative or non-finite stratum probability");
    }
    sum += entry.second;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw InvalidArgument("stratum probabilities do not sum to 1");
  }
  entries_ = std::move(ordered);
  property_count_ = m;
}

double JointDistribution::probability(const Stratum& stratum) const {
  for (const Entry& entry : entries_) {
    if (entry.first == stratum) return entry.second;
  }
  throw InvalidArgument("stratum not in joint distribution: " +
                        stratum.to_string());
}

WeightedStratification::WeightedStratification(
    std::vector<MarginalEstimate> marginals)
    : marginals_(std::move(marginals)), joint_(build_joint(marginals_)) {}

std::vector<PartitionProperty> WeightedStratification::properties() const {
  std::vector<PartitionProperty> out;
  out.reserve(marginals_.size());
  for (const MarginalEstimate& m : marginals_) out.push_back(m.property);
  return out;
}

std::size_t imbalance(const std::map<std::string, bool>& assignment) {
  if (assignment.empty()) throw InvalidArgument("empty partition");
  std::size_t true_count = 0;
  for (const auto& [solution, label] : assignment) {
    if (label) ++true_count;
  }
  const std::size_t false_count = assignment.size() - true_count;
  return true_count > false_count ? true_count - false_count
                                  : false_count - true_count;
}

JointDistribution build_joint(std::span<const MarginalEstimate> marginals) {
  if (marginals.empty() || marginals.size() > kMaxProperties) {
    throw InvalidArgument("property count out of range");
  }
  for (const MarginalEstimate& m : marginals) {
    if (!(m.p_true >= 0.0 && m.p_true <= 1.0)) {
      throw InvalidArgument("marginal probability outside [0, 1]");
    }
  }
  std::vector<JointDistribution::Entry> entries;
  for (Stratum& stratum : enumerate_strata(marginals.size())) {
    double p = 1.0;
    for (std::size_t i = 0; i < marginals.size(); ++i) {
      p *= stratum[i] ? marginals[i].p_true : 1.0 - marginals[i].p_true;
    }
    entries.emplace_back(std::move(stratum), p);
  }
  return JointDistribution(std::move(entries));
}

std::vector<double> normalize(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("weights must be finite and nonnegative");
    }
    total += w;
  }
  if (total <= 0.0) throw InvalidArgument("degenerate weights");
  std::vector<double> out;
  out.reserve(weights.size());
  for (double w : weights) out.push_back(w / total);
  return out;
}

Stratum sample_stratum(const JointDistribution& joint, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  const JointDistribution::Entry* last_positive = nullptr;
  for (const auto& entry : joint.entries()) {
    if (entry.second <= 0.0) continue;
    last_positive = &entry;
    cumulative += entry.second;
    if (u < cumulative) return entry.first;
  }
  // u landed in the rounding gap above the cumulative sum.
  return last_positive->first;
}

}  // namespace stratsample

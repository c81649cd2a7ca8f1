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

#ifndef STRATSAMPLE_CORE_H_
#define STRATSAMPLE_CORE_H_

// Value types and exact math for partition properties, marginal estimates,
// the joint distribution over strata and stratum sampling.
//
// Properties are binary (True/False) and a stratification holds at most
// kMaxProperties of them, so a joint distribution has at most 8 entries and
// is always materialized eagerly.

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stratsample/random.h"

namespace stratsample {

inline constexpr std::size_t kMaxProperties = 3;
inline constexpr double kProbabilitySumTolerance = 1e-9;

enum class PropertyOrigin { kAutoStratified, kUserSupplied };

const char* to_string(PropertyOrigin origin);
PropertyOrigin property_origin_from_string(const std::string& text);

// A True/False statement over the solution space of a request, e.g.
// "The state is east of the Mississippi River".
struct PartitionProperty {
  std::string id;
  std::string statement;
  PropertyOrigin origin = PropertyOrigin::kAutoStratified;

  friend bool operator==(const PartitionProperty&,
                         const PartitionProperty&) = default;
};

// Throws InvalidArgument if the statement is blank.
PartitionProperty make_property(std::string id, std::string statement,
                                PropertyOrigin origin);

// One boolean label per property of the owning stratification.
class Stratum {
 public:
  Stratum() = default;
  explicit Stratum(std::vector<bool> labels) : labels_(std::move(labels)) {}

  const std::vector<bool>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool operator[](std::size_t i) const { return labels_[i]; }

  // "TF", "FFT", ... ; the empty stratum renders as "".
  std::string to_string() const;
  static Stratum from_string(const std::string& text);

  friend bool operator==(const Stratum&, const Stratum&) = default;
  friend auto operator<=>(const Stratum& a, const Stratum& b) {
    return a.labels_ <=> b.labels_;
  }

 private:
  std::vector<bool> labels_;
};

// Enumerates all 2^m strata, all-true first, in the order TT, TF, FT, FF.
std::vector<Stratum> enumerate_strata(std::size_t property_count);

struct MarginalEstimate {
  PartitionProperty property;
  double p_true = 0.5;

  friend bool operator==(const MarginalEstimate&,
                         const MarginalEstimate&) = default;
};

// Probability per stratum. Entries are kept in enumerate_strata() order and
// the key set is exactly the 2^m strata.
class JointDistribution {
 public:
  using Entry = std::pair<Stratum, double>;

  // Validates: complete key set, probabilities >= 0, sum within 1e-9 of 1.
  explicit JointDistribution(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t property_count() const { return property_count_; }
  std::size_t size() const { return entries_.size(); }

  // Throws InvalidArgument if the stratum is not a key.
  double probability(const Stratum& stratum) const;

 private:
  std::vector<Entry> entries_;
  std::size_t property_count_ = 0;
};

// Selected properties plus their marginals and the product-form joint.
class WeightedStratification {
 public:
  // Builds the joint from the marginals.
  explicit WeightedStratification(std::vector<MarginalEstimate> marginals);

  std::vector<PartitionProperty> properties() const;
  const std::vector<MarginalEstimate>& marginals() const { return marginals_; }
  const JointDistribution& joint() const { return joint_; }
  std::size_t property_count() const { return marginals_.size(); }

 private:
  std::vector<MarginalEstimate> marginals_;
  JointDistribution joint_;
};

// |#true - #false| over a solution -> label assignment.
// Throws InvalidArgument("empty partition") on an empty assignment.
std::size_t imbalance(const std::map<std::string, bool>& assignment);

// rho(l) = prod_i (l_i ? p_i : 1 - p_i) for each of the 2^m strata.
// Throws InvalidArgument("property count out of range") unless 1 <= m <= 3.
JointDistribution build_joint(std::span<const MarginalEstimate> marginals);

// weight_i / sum(weights). Throws InvalidArgument("degenerate weights") if
// every weight is zero, and on negative or non-finite weights.
std::vector<double> normalize(std::span<const double> weights);

// Inverse-CDF draw over the joint's entries in their canonical order.
Stratum sample_stratum(const JointDistribution& joint, Rng& rng);

}  // namespace stratsample

#endif  // STRATSAMPLE_CORE_H_

// Copyright 2026 The cfshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFSHAP_COUNTERFACTUAL_HPP_
#define CFSHAP_COUNTERFACTUAL_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cfshap/classifier.hpp"
#include "cfshap/contrastive.hpp"
#include "cfshap/matrix.hpp"
#include "cfshap/shapley.hpp"

namespace cfshap {

// Exact Euclidean neighbor search over the (standardized) training points.
// Results are ordered by distance, then by training index.
class NeighborIndex {
 public:
  explicit NeighborIndex(Matrix reference);

  std::size_t size() const { return reference_.rows(); }
  const Matrix& points() const { return reference_; }

  // Training indices of the min(n, size()) nearest points.
  std::vector<std::size_t> nearest(std::span<const double> dp, std::size_t n) const;
  std::vector<FeatureVector> nearest_points(std::span<const double> dp, std::size_t n) const;

 private:
  Matrix reference_;
};

using FeatureMask = std::vector<bool>;

// Neighbor values where the mask is set, dp values elsewhere.
FeatureVector mutate(std::span<const double> dp, std::span<const double> neighbor, const FeatureMask& mask);

// Features with a negative attribution for the desired class.
FeatureMask adverse_features(const ShapleyMatrix& sv, ClassId desired);

struct CounterfactualSet {
  ContrastiveQuery query;
  FeatureMask mutate_mask;
  std::vector<FeatureVector> points;  // deduplicated, in neighbor order
  std::size_t raw_count = 0;          // accepted mutants before deduplication
  std::size_t neighbor_budget_used = 0;
  bool is_fallback = false;
  std::optional<FeatureVector> fallback_point;
};

inline constexpr std::size_t kNeighborStep = 50;

// Valid, deduplicated mutants built from the first `budget` neighbors.
// Also reports the number accepted before deduplication.
std::vector<FeatureVector> collect_counterfactuals(const Classifier& model, std::span<const double> dp,
                                                   ClassId desired, const FeatureMask& mask,
                                                   const NeighborIndex& index, std::size_t budget,
                                                   std::size_t* raw_count = nullptr);

// Grows the neighbor budget in steps of 50 until a batch yields at least one
// mutant classified as `desired`. Falls back to the nearest training point
// predicted as `desired` when no mutant works or the mask is empty; throws
// kNoCounterfactual when no such point exists either.
CounterfactualSet find_counterfactuals(const Classifier& model, std::span<const double> dp,
                                       ClassId desired, const ShapleyMatrix& sv,
                                       const NeighborIndex& index);

std::optional<FeatureVector> fallback_nearest_desired(const NeighborIndex& index, std::span<const double> dp,
                                                      ClassId desired, const Classifier& model);

}  // namespace cfshap

#endif  // CFSHAP_COUNTERFACTUAL_HPP_

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

#include "cfshap/counterfactual.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "cfshap/error.hpp"

namespace cfshap {

NeighborIndex::NeighborIndex(Matrix reference) : reference_(std::move(reference)) {}

std::vector<std::size_t> NeighborIndex::nearest(std::span<const double> dp, std::size_t n) const {
  if (dp.size() != reference_.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch", "neighbor query");
  }
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "neighbor count must be >= 1");
  std::vector<std::pair<double, std::size_t>> dist(reference_.rows());
  for (std::size_t i = 0; i < reference_.rows(); ++i) {
    const auto r = reference_.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < dp.size(); ++j) {
      const double diff = dp[j] - r[j];
      s += diff * diff;
    }
    dist[i] = {s, i};
  }
  const std::size_t k = std::min(n, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

std::vector<FeatureVector> NeighborIndex::nearest_points(std::span<const double> dp, std::size_t n) const {
  std::vector<FeatureVector> out;
  for (std::size_t i : nearest(dp, n)) out.push_back(reference_.row_vector(i));
  return out;
}

FeatureVector mutate(std::span<const double> dp, std::span<const double> neighbor, const FeatureMask& mask) {
  if (dp.size() != neighbor.size() || dp.size() != mask.size()) {
    throw Error(ErrorCode::kInvalidArgument, "length mismatch", "mutate");
  }
  FeatureVector out(dp.begin(), dp.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (mask[j]) out[j] = neighbor[j];
  }
  return out;
}

FeatureMask adverse_features(const ShapleyMatrix& sv, ClassId desired) {
  const auto row = sv.for_class(desired);
  FeatureMask mask(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) mask[j] = row[j] < 0.0;
  return mask;
}

namespace {

// Classifies the mutants of neighbors [begin, end) and appends the accepted
// ones (in neighbor order) to `out`, skipping duplicates.
void scan_batch(const Classifier& model, std::span<const double> dp, ClassId desired, const FeatureMask& mask,
                const NeighborIndex& index, std::span<const std::size_t> order, std::size_t begin,
                std::size_t end, std::set<FeatureVector>& seen, std::vector<FeatureVector>& out,
                std::size_t& raw) {
  const std::size_t count = end - begin;
  std::vector<FeatureVector> mutants(count);
  std::vector<char> accepted(count, 0);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(count); ++k) {
    const auto i = static_cast<std::size_t>(k);
    mutants[i] = mutate(dp, index.points().row(order[begin + i]), mask);
    accepted[i] = model.predict_unchecked(mutants[i]) == desired ? 1 : 0;
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!accepted[i]) continue;
    ++raw;
    if (seen.insert(mutants[i]).second) out.push_back(std::move(mutants[i]));
  }
}

}  // namespace

std::vector<FeatureVector> collect_counterfactuals(const Classifier& model, std::span<const double> dp,
                                                   ClassId desired, const FeatureMask& mask,
                                                   const NeighborIndex& index, std::size_t budget,
                                                   std::size_t* raw_count) {
  const auto order = index.nearest(dp, budget);
  std::set<FeatureVector> seen;
  std::vector<FeatureVector> out;
  std::size_t raw = 0;
  scan_batch(model, dp, desired, mask, index, order, 0, order.size(), seen, out, raw);
  if (raw_count) *raw_count = raw;
  return out;
}

std::optional<FeatureVector> fallback_nearest_desired(const NeighborIndex& index, std::span<const double> dp,
                                                      ClassId desired, const Classifier& model) {
  if (index.size() == 0) return std::nullopt;
  for (std::size_t i : index.nearest(dp, index.size())) {
    const auto r = index.points().row(i);
    if (model.predict_unchecked(r) == desired) return FeatureVector(r.begin(), r.end());
  }
  return std::nullopt;
}

CounterfactualSet find_counterfactuals(const Classifier& model, std::span<const double> dp,
                                       ClassId desired, const ShapleyMatrix& sv,
                                       const NeighborIndex& index) {
  if (desired < 0 || static_cast<std::size_t>(desired) >= model.class_count()) {
    throw Error(ErrorCode::kInvalidArgument, "desired class out of range", std::to_string(desired));
  }
  const ClassId predicted = model.predict(dp);
  if (predicted == desired) {
    throw Error(ErrorCode::kNotContrastive, "not contrastive: desired class equals the prediction");
  }
  if (sv.feature_count() != dp.size() || sv.class_count() != model.class_count()) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch", "attribution matrix shape");
  }

  CounterfactualSet result;
  result.query = {FeatureVector(dp.begin(), dp.end()), predicted, desired};
  result.mutate_mask = adverse_features(sv, desired);

  const bool any_mutable = std::find(result.mutate_mask.begin(), result.mutate_mask.end(), true) !=
                           result.mutate_mask.end();
  if (any_mutable && index.size() > 0) {
    const auto order = index.nearest(dp, index.size());
    std::set<FeatureVector> seen;
    // Batches before the first success contribute nothing, so scanning only
    // the new neighbors of each budget step is equivalent to rescanning.
    for (std::size_t i = 1;; ++i) {
      const std::size_t begin = kNeighborStep * (i - 1);
      const std::size_t end = std::min(kNeighborStep * i, order.size());
      scan_batch(model, dp, desired, result.mutate_mask, index, order, begin, end, seen, result.points,
                 result.raw_count);
      if (!result.points.empty()) {
        result.neighbor_budget_used = kNeighborStep * i;
        return result;
      }
      if (end == order.size()) break;
    }
  }

  result.is_fallback = true;
  result.fallback_point = fallback_nearest_desired(index, dp, desired, model);
  if (!result.fallback_point) {
    throw Error(ErrorCode::kNoCounterfactual, "no counterfactual and no training point is predicted as the desired class",
                std::to_string(desired));
  }
  return result;
}

}  // namespace cfshap

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

#ifndef CFSHAP_CONTRASTIVE_HPP_
#define CFSHAP_CONTRASTIVE_HPP_

#include <string>
#include <utility>
#include <vector>

#include "cfshap/classifier.hpp"
#include "cfshap/shapley.hpp"

namespace cfshap {

// "Why P not Q?" about one point. The point is in model (standardized) units.
struct ContrastiveQuery {
  FeatureVector point;
  ClassId predicted = 0;
  ClassId desired = 0;
};

struct Attribution {
  std::string feature;
  std::size_t index = 0;
  double phi = 0.0;

  friend bool operator==(const Attribution&, const Attribution&) = default;
};

struct ContrastiveExplanation {
  std::vector<Attribution> why_p;  // phi > 0 for P, descending
  std::vector<Attribution> not_q;  // phi < 0 for Q, ascending
  std::string nl_why_p;
  std::string nl_not_q;
  ShapleyMatrix shapley;
};

struct IdentifiedQuery {
  ClassId predicted;
  ClassId desired;
  ShapleyMatrix shapley;
};

// Predicts P for the point and computes attributions for every class.
// Throws kNotContrastive when desired == P.
IdentifiedQuery identify_pq(const ValueFunctionSpec& spec, std::span<const double> point,
                            ClassId desired, const ShapleyConfig& config);

ContrastiveExplanation build_contrastive(const ShapleyMatrix& sv, ClassId predicted, ClassId desired,
                                         const std::vector<std::string>& feature_names);

enum class Polarity { kPro, kAnti };

std::string render_nl(const std::vector<Attribution>& features, Polarity polarity);

}  // namespace cfshap

#endif  // CFSHAP_CONTRASTIVE_HPP_

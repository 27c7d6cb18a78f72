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

#include "cfshap/contrastive.hpp"

#include <algorithm>

#include "cfshap/error.hpp"

namespace cfshap {
namespace {

void check_class(ClassId c, std::size_t classes, const char* what) {
  if (c < 0 || static_cast<std::size_t>(c) >= classes) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " class out of range", std::to_string(c));
  }
}

}  // namespace

IdentifiedQuery identify_pq(const ValueFunctionSpec& spec, std::span<const double> point,
                            ClassId desired, const ShapleyConfig& config) {
  spec.validate();
  check_class(desired, spec.model->class_count(), "desired");
  const ClassId predicted = spec.model->predict(point);
  if (desired == predicted) {
    throw Error(ErrorCode::kNotContrastive, "not contrastive: desired class equals the prediction",
                std::to_string(desired));
  }
  return {predicted, desired, explain_point(spec, point, config)};
}

ContrastiveExplanation build_contrastive(const ShapleyMatrix& sv, ClassId predicted, ClassId desired,
                                         const std::vector<std::string>& feature_names) {
  check_class(predicted, sv.class_count(), "predicted");
  check_class(desired, sv.class_count(), "desired");
  if (predicted == desired) {
    throw Error(ErrorCode::kNotContrastive, "not contrastive: desired class equals the prediction");
  }
  if (feature_names.size() != sv.feature_count()) {
    throw Error(ErrorCode::kInvalidArgument, "feature name count differs from attribution width");
  }

  ContrastiveExplanation ex;
  const auto pro = sv.for_class(predicted);
  const auto anti = sv.for_class(desired);
  for (std::size_t j = 0; j < sv.feature_count(); ++j) {
    if (pro[j] > 0.0) ex.why_p.push_back({feature_names[j], j, pro[j]});
    if (anti[j] < 0.0) ex.not_q.push_back({feature_names[j], j, anti[j]});
  }
  // Stable sorts keep the lower feature index first among equal values.
  std::stable_sort(ex.why_p.begin(), ex.why_p.end(),
                   [](const Attribution& a, const Attribution& b) { return a.phi > b.phi; });
  std::stable_sort(ex.not_q.begin(), ex.not_q.end(),
                   [](const Attribution& a, const Attribution& b) { return a.phi < b.phi; });
  ex.nl_why_p = render_nl(ex.why_p, Polarity::kPro);
  ex.nl_not_q = render_nl(ex.not_q, Polarity::kAnti);
  ex.shapley = sv;
  return ex;
}

std::string render_nl(const std::vector<Attribution>& features, Polarity polarity) {
  const char* word = polarity == Polarity::kPro ? "Pro" : "Anti";
  if (features.empty()) {
    return std::string("No features ") + (polarity == Polarity::kPro ? "pro" : "anti") +
           " this classification were identified.";
  }
  std::string text = std::string("Algorithms ") + word +
                     " classification was primarily influenced by " + features.front().feature;
  if (features.size() > 1) {
    text += ", also influenced by ";
    for (std::size_t i = 1; i < features.size(); ++i) {
      if (i > 1) text += ", ";
      text += features[i].feature;
    }
  }
  return text;
}

}  // namespace cfshap

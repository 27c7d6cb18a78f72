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

#ifndef CFSHAP_PIPELINE_HPP_
#define CFSHAP_PIPELINE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "cfshap/classifier.hpp"
#include "cfshap/contrastive.hpp"
#include "cfshap/counterfactual.hpp"
#include "cfshap/dataset.hpp"
#include "cfshap/shapley.hpp"

namespace cfshap {

struct PipelineConfig {
  std::uint64_t seed = kDefaultSeed;
  double split_ratio = kDefaultSplitRatio;
  bool stratified = true;
  Hyperparameters hyperparameters;
  ShapleyConfig shapley;
  // Evaluate every row instead of the test split.
  bool evaluate_all_rows = false;
  // Caps the number of evaluation points (0 = no cap); the first points of
  // the evaluation set in index order are used.
  std::size_t max_eval_points = 0;

  // Hash of every setting plus the dataset name and model family.
  std::string fingerprint(const std::string& dataset, ModelFamily family) const;
};

// Everything needed to answer queries for one (dataset, family, config):
// the split, the standardized data, the fitted model, the Shapley
// background and the neighbor index. Immutable once built.
class Pipeline {
 public:
  static std::shared_ptr<const Pipeline> build(const Dataset& raw, ModelFamily family,
                                               const PipelineConfig& config);

  struct Answer {
    ContrastiveExplanation explanation;
    // Empty when neither a counterfactual nor a fallback point exists.
    std::optional<CounterfactualSet> counterfactuals;
  };

  // `point` is in standardized units.
  Answer explain(std::span<const double> point, ClassId desired) const;
  // Same, reusing attributions that were already computed for `point`.
  Answer explain(const ShapleyMatrix& sv, ClassId predicted, ClassId desired) const;

  const Dataset& raw() const { return raw_; }
  const Dataset& standardized() const { return standardized_; }
  const Standardization& scaler() const { return *standardized_.standardization; }
  const Split& split() const { return split_; }
  const Model& model() const { return *model_; }
  ModelFamily family() const { return model_->family(); }
  const ValueFunctionSpec& value_function() const { return value_function_; }
  const NeighborIndex& neighbors() const { return neighbors_; }
  const PipelineConfig& config() const { return config_; }
  const std::string& config_fingerprint() const { return config_fingerprint_; }

 private:
  Pipeline(Dataset raw, Dataset standardized, Split split, std::unique_ptr<Model> model, Matrix background,
           Matrix train_points, PipelineConfig config, std::string config_fingerprint);

  Dataset raw_;
  Dataset standardized_;
  Split split_;
  std::unique_ptr<Model> model_;
  ValueFunctionSpec value_function_;
  NeighborIndex neighbors_;
  PipelineConfig config_;
  std::string config_fingerprint_;
};

}  // namespace cfshap

#endif  // CFSHAP_PIPELINE_HPP_

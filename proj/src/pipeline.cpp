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

#include "cfshap/pipeline.hpp"

#include "cfshap/error.hpp"
#include "cfshap/fingerprint.hpp"
#include "cfshap/random.hpp"
#include "json.hpp"

namespace cfshap {
namespace {

std::string_view mode_name(ShapleyConfig::Mode mode) {
  switch (mode) {
    case ShapleyConfig::Mode::kAuto:
      return "auto";
    case ShapleyConfig::Mode::kExact:
      return "exact";
    case ShapleyConfig::Mode::kSampled:
      return "sampled";
  }
  return "unknown";
}

}  // namespace

std::string PipelineConfig::fingerprint(const std::string& dataset, ModelFamily family) const {
  const auto& hp = hyperparameters;
  const nlohmann::json j{
      {"dataset", dataset},
      {"family", family_name(family)},
      {"seed", seed},
      {"split_ratio", split_ratio},
      {"stratified", stratified},
      {"standardize", true},
      {"hyperparameters",
       {hp.knn_k, hp.rf_trees, hp.rf_max_depth, hp.rf_min_samples_split, hp.rf_max_features, hp.nn_hidden,
        hp.nn_l2, hp.nn_tolerance, hp.nn_max_iterations, hp.nn_history, hp.svm_lambda, hp.svm_iterations}},
      {"shapley",
       {mode_name(shapley.mode), shapley.n_permutations, shapley.seed, shapley.exact_dimension_cap,
        shapley.background_size}},
      {"evaluate_all_rows", evaluate_all_rows},
      {"max_eval_points", max_eval_points},
      {"neighbor_step", kNeighborStep},
      {"dedup", true},
      {"common_tolerance", 1e-9},
  };
  return sha256_hex(j.dump());
}

Pipeline::Pipeline(Dataset raw, Dataset standardized, Split split, std::unique_ptr<Model> model,
                   Matrix background, Matrix train_points, PipelineConfig config, std::string config_fingerprint)
    : raw_(std::move(raw)),
      standardized_(std::move(standardized)),
      split_(std::move(split)),
      model_(std::move(model)),
      value_function_{model_.get(), std::move(background)},
      neighbors_(std::move(train_points)),
      config_(std::move(config)),
      config_fingerprint_(std::move(config_fingerprint)) {}

std::shared_ptr<const Pipeline> Pipeline::build(const Dataset& raw, ModelFamily family,
                                                const PipelineConfig& config) {
  raw.validate();
  Split sp = cfshap::split(raw, config.split_ratio, config.seed, config.stratified);
  Dataset standardized = standardize(raw, sp);
  Matrix train = standardized.points.select_rows(sp.train_indices);
  std::vector<ClassId> labels;
  labels.reserve(sp.train_indices.size());
  for (std::size_t i : sp.train_indices) labels.push_back(standardized.labels[i]);

  auto model = fit(family, train, labels, standardized.num_classes(), config.hyperparameters, config.seed);
  Matrix background = select_background(train, labels, standardized.num_classes(),
                                        config.shapley.background_size, mix_seed(config.seed, 0x5ba9));
  auto fp = config.fingerprint(raw.name, family);
  return std::shared_ptr<const Pipeline>(new Pipeline(raw, std::move(standardized), std::move(sp), std::move(model),
                                                      std::move(background), std::move(train), config,
                                                      std::move(fp)));
}

Pipeline::Answer Pipeline::explain(std::span<const double> point, ClassId desired) const {
  auto identified = identify_pq(value_function_, point, desired, config_.shapley);
  return explain(identified.shapley, identified.predicted, identified.desired);
}

Pipeline::Answer Pipeline::explain(const ShapleyMatrix& sv, ClassId predicted, ClassId desired) const {
  Answer answer{build_contrastive(sv, predicted, desired, standardized_.feature_names()), std::nullopt};
  try {
    answer.counterfactuals = find_counterfactuals(*model_, sv.point, desired, sv, neighbors_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoCounterfactual) throw;
  }
  return answer;
}

}  // namespace cfshap

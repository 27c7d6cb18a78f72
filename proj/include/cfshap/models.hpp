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

#ifndef CFSHAP_MODELS_HPP_
#define CFSHAP_MODELS_HPP_

#include <cstdint>
#include <vector>

#include "cfshap/classifier.hpp"
#include "json.hpp"

namespace cfshap {

// Majority vote over the k nearest training points (Euclidean); equal
// distances resolve to the lower training index.
class KnnModel final : public Model {
 public:
  KnnModel(Hyperparameters hp, Matrix train, std::vector<ClassId> labels, std::size_t classes,
           std::string fingerprint);

  void predict_proba_into(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json state() const;
  static std::unique_ptr<KnnModel> from_state(const Hyperparameters& hp, std::size_t classes,
                                              std::string fingerprint, const nlohmann::json& s);

 private:
  Matrix train_;
  // Feature-major copy of train_, so distances accumulate across many
  // training rows at once in the same per-row order.
  std::vector<double> by_feature_;
  std::vector<ClassId> labels_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // taken when x[feature] <= threshold
  int right = -1;
  int leaf = -1;   // index of the class distribution for leaves
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::vector<double> leaf_values;  // class_count entries per leaf
  std::size_t class_count = 0;

  std::span<const double> leaf_distribution(std::span<const double> x) const;
};

// Mean of the per-tree leaf class distributions.
class RandomForestModel final : public Model {
 public:
  RandomForestModel(Hyperparameters hp, std::vector<DecisionTree> trees, std::size_t classes,
                    std::size_t features, std::string fingerprint);

  static std::unique_ptr<RandomForestModel> train(const Hyperparameters& hp, const Matrix& x,
                                                  std::span<const ClassId> y, std::size_t classes,
                                                  std::uint64_t seed, std::string fingerprint);

  void predict_proba_into(std::span<const double> x, std::span<double> out) const override;
  // Walks each tree over the whole batch while its nodes are cache-resident.
  void predict_proba_rows(std::span<const double> rows, std::size_t n, std::span<double> out) const override;
  const std::vector<DecisionTree>& trees() const { return trees_; }
  nlohmann::json state() const;
  static std::unique_ptr<RandomForestModel> from_state(const Hyperparameters& hp, std::size_t classes,
                                                       std::size_t features, std::string fingerprint,
                                                       const nlohmann::json& s);

 private:
  std::vector<DecisionTree> trees_;
};

// One tanh hidden layer and a softmax output, trained full-batch with L-BFGS
// on L2-regularized cross-entropy.
class NeuralNetModel final : public Model {
 public:
  NeuralNetModel(Hyperparameters hp, std::size_t classes, std::size_t features,
                 std::vector<double> params, std::string fingerprint);

  static std::unique_ptr<NeuralNetModel> train(const Hyperparameters& hp, const Matrix& x,
                                               std::span<const ClassId> y, std::size_t classes,
                                               std::uint64_t seed, std::string fingerprint);

  void predict_proba_into(std::span<const double> x, std::span<double> out) const override;
  const std::vector<double>& parameters() const { return params_; }
  std::size_t iterations() const { return iterations_; }
  double final_loss() const { return final_loss_; }

 private:
  std::vector<double> params_;  // W1 (H x d), b1 (H), W2 (C x H), b2 (C)
  std::size_t iterations_ = 0;
  double final_loss_ = 0.0;
};

// One-vs-rest linear SVMs; probabilities are the softmax of the C margins.
class LinearSvmModel final : public Model {
 public:
  LinearSvmModel(Hyperparameters hp, std::size_t classes, std::size_t features,
                 std::vector<double> weights, std::vector<double> bias, std::string fingerprint);

  static std::unique_ptr<LinearSvmModel> train(const Hyperparameters& hp, const Matrix& x,
                                               std::span<const ClassId> y, std::size_t classes,
                                               std::string fingerprint);

  void predict_proba_into(std::span<const double> x, std::span<double> out) const override;
  void decision_scores(std::span<const double> x, std::span<double> out) const;
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  std::vector<double> weights_;  // C x d
  std::vector<double> bias_;     // C
};

// Numerically stable in-place softmax.
void softmax_inplace(std::span<double> values);

}  // namespace cfshap

#endif  // CFSHAP_MODELS_HPP_

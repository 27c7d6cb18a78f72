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

#ifndef CFSHAP_CLASSIFIER_HPP_
#define CFSHAP_CLASSIFIER_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfshap/matrix.hpp"

namespace cfshap {

// Black-box probabilistic classifier. Implementations are immutable after
// construction and safe to query from many threads.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t class_count() const = 0;
  virtual std::size_t feature_count() const = 0;

  // Unchecked hot path: `x` has feature_count() entries and `out` has
  // class_count() entries.
  virtual void predict_proba_into(std::span<const double> x, std::span<double> out) const = 0;

  // Unchecked batch form: `rows` holds n row-major points and `out` n
  // probability rows. Each output row must equal what predict_proba_into
  // gives for that point; overrides only change the evaluation order.
  virtual void predict_proba_rows(std::span<const double> rows, std::size_t n, std::span<double> out) const;

  // Checked entry points. Throw kInvalidArgument on a dimension mismatch or
  // non-finite input.
  std::vector<double> predict_proba(std::span<const double> x) const;
  ClassId predict(std::span<const double> x) const;

  // Unchecked; equivalent to argmax over predict_proba_into.
  ClassId predict_unchecked(std::span<const double> x) const;
};

// Index of the largest entry; the lowest index wins ties.
ClassId argmax_lowest(std::span<const double> values);

enum class ModelFamily { kKnn, kRandomForest, kNeuralNet, kLinearSvm };

std::string_view family_name(ModelFamily family);
ModelFamily parse_family(std::string_view name);
inline constexpr ModelFamily kAllFamilies[] = {ModelFamily::kLinearSvm, ModelFamily::kRandomForest,
                                               ModelFamily::kNeuralNet, ModelFamily::kKnn};

struct Hyperparameters {
  // KNN
  std::size_t knn_k = 5;
  // Random forest
  std::size_t rf_trees = 100;
  std::size_t rf_max_depth = 8;
  std::size_t rf_min_samples_split = 2;
  std::size_t rf_max_features = 0;  // 0 selects floor(sqrt(d))
  // Neural network
  std::size_t nn_hidden = 16;
  double nn_l2 = 1e-4;
  double nn_tolerance = 1e-6;
  std::size_t nn_max_iterations = 2000;
  std::size_t nn_history = 10;
  // Linear SVM
  double svm_lambda = 1e-3;
  std::size_t svm_iterations = 2000;

  void validate(ModelFamily family) const;
  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

// A fitted model of one of the four supported families.
class Model : public Classifier {
 public:
  Model(ModelFamily family, Hyperparameters hp, std::size_t classes, std::size_t features,
        std::string fingerprint)
      : family_(family),
        hp_(hp),
        classes_(classes),
        features_(features),
        fingerprint_(std::move(fingerprint)) {}

  ModelFamily family() const { return family_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  std::size_t class_count() const final { return classes_; }
  std::size_t feature_count() const final { return features_; }
  // Hash of family, hyperparameters, seed and training data.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  ModelFamily family_;
  Hyperparameters hp_;
  std::size_t classes_;
  std::size_t features_;
  std::string fingerprint_;
};

// Trains a model. `x` rows are training points, `y` their class ids in
// [0, num_classes). Deterministic in `seed`.
std::unique_ptr<Model> fit(ModelFamily family, const Matrix& x, std::span<const ClassId> y,
                           std::size_t num_classes, const Hyperparameters& hp, std::uint64_t seed);

std::string training_fingerprint(ModelFamily family, const Hyperparameters& hp, const Matrix& x,
                                 std::span<const ClassId> y, std::size_t num_classes,
                                 std::uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

void save_model(const Model& model, std::ostream& out);
// Throws kVersionMismatch when the file was written by another format version.
std::unique_ptr<Model> load_model(std::istream& in);

}  // namespace cfshap

#endif  // CFSHAP_CLASSIFIER_HPP_

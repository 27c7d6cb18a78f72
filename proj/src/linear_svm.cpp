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

#include <cmath>
#include <limits>

#include "cfshap/error.hpp"
#include "cfshap/models.hpp"

namespace cfshap {
namespace {

// lambda/2 |w|^2 + mean hinge loss.
double svm_objective(const Matrix& x, std::span<const double> target, std::span<const double> w,
                     double b, double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    double m = b;
    for (std::size_t j = 0; j < xi.size(); ++j) m += w[j] * xi[j];
    hinge += std::max(0.0, 1.0 - target[i] * m);
  }
  double sq = 0.0;
  for (double v : w) sq += v * v;
  return 0.5 * lambda * sq + hinge / static_cast<double>(x.rows());
}

}  // namespace

LinearSvmModel::LinearSvmModel(Hyperparameters hp, std::size_t classes, std::size_t features,
                               std::vector<double> weights, std::vector<double> bias,
                               std::string fingerprint)
    : Model(ModelFamily::kLinearSvm, hp, classes, features, std::move(fingerprint)),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (weights_.size() != classes * features || bias_.size() != classes) {
    throw Error(ErrorCode::kInvalidArgument, "SVM parameters have wrong size");
  }
}

std::unique_ptr<LinearSvmModel> LinearSvmModel::train(const Hyperparameters& hp, const Matrix& x,
                                                      std::span<const ClassId> y, std::size_t classes,
                                                      std::string fingerprint) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double lambda = hp.svm_lambda;
  const double radius = 1.0 / std::sqrt(lambda);
  std::vector<double> weights(classes * d, 0.0);
  std::vector<double> bias(classes, 0.0);
  std::vector<double> target(n);
  std::vector<double> w(d);
  std::vector<double> grad(d);

  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) target[i] = y[i] == static_cast<ClassId>(c) ? 1.0 : -1.0;
    std::fill(w.begin(), w.end(), 0.0);
    double b = 0.0;
    std::vector<double> best_w = w;
    double best_b = b;
    double best_obj = svm_objective(x, target, w, b, lambda);

    // Full-batch Pegasos: step 1/(lambda t), projection onto the ball that
    // contains the optimum, and the lowest-objective iterate is kept.
    for (std::size_t t = 1; t <= hp.svm_iterations; ++t) {
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      std::fill(grad.begin(), grad.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto xi = x.row(i);
        double m = b;
        for (std::size_t j = 0; j < d; ++j) m += w[j] * xi[j];
        if (target[i] * m < 1.0) {
          for (std::size_t j = 0; j < d; ++j) grad[j] -= target[i] * xi[j];
          grad_b -= target[i];
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      double norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        w[j] -= eta * (lambda * w[j] + grad[j] * inv_n);
        norm += w[j] * w[j];
      }
      norm = std::sqrt(norm);
      if (norm > radius) {
        for (double& v : w) v *= radius / norm;
      }
      b -= eta * grad_b * inv_n;
      b = std::clamp(b, -radius, radius);

      const double obj = svm_objective(x, target, w, b, lambda);
      if (obj < best_obj) {
        best_obj = obj;
        best_w = w;
        best_b = b;
      }
    }
    std::copy(best_w.begin(), best_w.end(), weights.begin() + static_cast<std::ptrdiff_t>(c * d));
    bias[c] = best_b;
  }
  return std::make_unique<LinearSvmModel>(hp, classes, d, std::move(weights), std::move(bias),
                                          std::move(fingerprint));
}

void LinearSvmModel::decision_scores(std::span<const double> x, std::span<double> out) const {
  const std::size_t d = feature_count();
  for (std::size_t c = 0; c < class_count(); ++c) {
    const double* w = weights_.data() + c * d;
    double s = bias_[c];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j];
    out[c] = s;
  }
}

void LinearSvmModel::predict_proba_into(std::span<const double> x, std::span<double> out) const {
  decision_scores(x, out);
  softmax_inplace(out);
}

}  // namespace cfshap

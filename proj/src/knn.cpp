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

#include <algorithm>
#include <limits>

#include "cfshap/error.hpp"
#include "cfshap/models.hpp"

namespace cfshap {
namespace {

// Wider vectors on x86 when the CPU has them. Each lane accumulates one
// training row in feature order without fused multiply-add, so every clone
// returns bit-identical distances.
#if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
#define CFSHAP_VECTOR_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define CFSHAP_VECTOR_CLONES
#endif

CFSHAP_VECTOR_CLONES
void squared_distances(const double* x, const double* by_feature, std::size_t n, std::size_t d,
                       double* __restrict dist) {
  for (std::size_t i = 0; i < n; ++i) dist[i] = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double xj = x[j];
    const double* __restrict col = by_feature + j * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = xj - col[i];
      dist[i] += diff * diff;
    }
  }
}

}  // namespace

KnnModel::KnnModel(Hyperparameters hp, Matrix train, std::vector<ClassId> labels,
                   std::size_t classes, std::string fingerprint)
    : Model(ModelFamily::kKnn, hp, classes, train.cols(), std::move(fingerprint)),
      train_(std::move(train)),
      by_feature_(train_.rows() * train_.cols()),
      labels_(std::move(labels)) {
  const std::size_t n = train_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < train_.cols(); ++j) by_feature_[j * n + i] = train_(i, j);
  }
}

void KnnModel::predict_proba_into(std::span<const double> x, std::span<double> out) const {
  const std::size_t k = std::min(hyperparameters().knn_k, train_.rows());
  const std::size_t d = train_.cols();
  constexpr std::size_t kInline = 32;
  std::size_t idx_buf[kInline];
  double dist_buf[kInline];
  std::vector<std::size_t> idx_heap;
  std::vector<double> dist_heap;
  std::size_t* best_idx = idx_buf;
  double* best_dist = dist_buf;
  if (k > kInline) {
    idx_heap.resize(k);
    dist_heap.resize(k);
    best_idx = idx_heap.data();
    best_dist = dist_heap.data();
  }

  const std::size_t n = train_.rows();
  thread_local std::vector<double> dist;
  dist.resize(n);
  squared_distances(x.data(), by_feature_.data(), n, d, dist.data());

  // Sorted insertion into the running top-k. A strictly smaller distance is
  // required to displace an entry, so earlier training rows win ties.
  std::size_t filled = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = dist[i];
    if (filled == k && !(di < best_dist[k - 1])) continue;
    std::size_t pos = filled < k ? filled++ : k - 1;
    while (pos > 0 && di < best_dist[pos - 1]) {
      best_dist[pos] = best_dist[pos - 1];
      best_idx[pos] = best_idx[pos - 1];
      --pos;
    }
    best_dist[pos] = di;
    best_idx[pos] = i;
  }

  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t n = 0; n < filled; ++n) out[static_cast<std::size_t>(labels_[best_idx[n]])] += 1.0;
  for (double& v : out) v /= static_cast<double>(filled);
}

nlohmann::json KnnModel::state() const {
  return nlohmann::json{{"rows", train_.rows()},
                        {"cols", train_.cols()},
                        {"points", train_.data()},
                        {"labels", labels_}};
}

std::unique_ptr<KnnModel> KnnModel::from_state(const Hyperparameters& hp, std::size_t classes,
                                               std::string fingerprint, const nlohmann::json& s) {
  Matrix train(s.at("rows").get<std::size_t>(), s.at("cols").get<std::size_t>());
  train.data() = s.at("points").get<std::vector<double>>();
  if (train.data().size() != train.rows() * train.cols()) {
    throw Error(ErrorCode::kDataError, "malformed KNN state");
  }
  return std::make_unique<KnnModel>(hp, std::move(train), s.at("labels").get<std::vector<ClassId>>(),
                                    classes, std::move(fingerprint));
}

}  // namespace cfshap

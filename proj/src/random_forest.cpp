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
#include <cmath>
#include <numeric>

#include "cfshap/error.hpp"
#include "cfshap/random.hpp"
#include "cfshap/models.hpp"

namespace cfshap {

std::span<const double> DecisionTree::leaf_distribution(std::span<const double> x) const {
  const TreeNode* node = &nodes[0];
  while (node->feature >= 0) {
    node = &nodes[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
  }
  return {leaf_values.data() + static_cast<std::size_t>(node->leaf) * class_count, class_count};
}

namespace {

// CART growth with Gini impurity on a bootstrap sample.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const ClassId> y, std::size_t classes,
              const Hyperparameters& hp, Rng& rng)
      : x_(x), y_(y), classes_(classes), hp_(hp), rng_(rng) {
    const std::size_t d = x.cols();
    mtry_ = hp.rf_max_features > 0
                ? std::min(hp.rf_max_features, d)
                : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), 0);
    tree_.class_count = classes;
  }

  DecisionTree build(std::vector<std::size_t> sample) {
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  int make_leaf(std::span<const std::size_t> sample) {
    const int leaf = static_cast<int>(tree_.leaf_values.size() / classes_);
    const std::size_t base = tree_.leaf_values.size();
    tree_.leaf_values.resize(base + classes_, 0.0);
    for (std::size_t i : sample) tree_.leaf_values[base + static_cast<std::size_t>(y_[i])] += 1.0;
    for (std::size_t c = 0; c < classes_; ++c) {
      tree_.leaf_values[base + c] /= static_cast<double>(sample.size());
    }
    TreeNode node;
    node.leaf = leaf;
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  int grow(std::vector<std::size_t>& sample, std::size_t depth) {
    std::vector<double> counts(classes_, 0.0);
    for (std::size_t i : sample) counts[static_cast<std::size_t>(y_[i])] += 1.0;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    if (pure || depth >= hp_.rf_max_depth || sample.size() < hp_.rf_min_samples_split) {
      return make_leaf(sample);
    }

    // Partial Fisher-Yates picks mtry distinct candidate features.
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t j = k + uniform_index(rng_, features_.size() - k);
      std::swap(features_[k], features_[j]);
    }

    const double n = static_cast<double>(sample.size());
    double best_score = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, ClassId>> column(sample.size());
    std::vector<double> left(classes_);
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t f = features_[k];
      for (std::size_t s = 0; s < sample.size(); ++s) column[s] = {x_(sample[s], f), y_[sample[s]]};
      std::sort(column.begin(), column.end());
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t s = 0; s + 1 < column.size(); ++s) {
        left[static_cast<std::size_t>(column[s].second)] += 1.0;
        if (!(column[s].first < column[s + 1].first)) continue;
        const double nl = static_cast<double>(s + 1);
        const double nr = n - nl;
        double sq_l = 0.0;
        double sq_r = 0.0;
        for (std::size_t c = 0; c < classes_; ++c) {
          sq_l += left[c] * left[c];
          const double r = counts[c] - left[c];
          sq_r += r * r;
        }
        // Weighted Gini up to a constant factor: n_l*G_l + n_r*G_r.
        const double score = (nl - sq_l / nl) + (nr - sq_r / nr);
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          double mid = 0.5 * (column[s].first + column[s + 1].first);
          if (!(mid < column[s + 1].first)) mid = column[s].first;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return make_leaf(sample);

    std::vector<std::size_t> left_sample;
    std::vector<std::size_t> right_sample;
    for (std::size_t i : sample) {
      (x_(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_sample : right_sample).push_back(i);
    }
    sample.clear();
    sample.shrink_to_fit();

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{best_feature, best_threshold, -1, -1, -1});
    const int l = grow(left_sample, depth + 1);
    const int r = grow(right_sample, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const ClassId> y_;
  std::size_t classes_;
  const Hyperparameters& hp_;
  Rng& rng_;
  std::size_t mtry_ = 1;
  std::vector<std::size_t> features_;
  DecisionTree tree_;
};

}  // namespace

RandomForestModel::RandomForestModel(Hyperparameters hp, std::vector<DecisionTree> trees,
                                     std::size_t classes, std::size_t features, std::string fingerprint)
    : Model(ModelFamily::kRandomForest, hp, classes, features, std::move(fingerprint)),
      trees_(std::move(trees)) {
  if (trees_.empty()) throw Error(ErrorCode::kInvalidArgument, "forest has no trees");
  for (const auto& t : trees_) {
    if (t.nodes.empty() || t.class_count != classes) {
      throw Error(ErrorCode::kInvalidArgument, "malformed tree");
    }
  }
}

std::unique_ptr<RandomForestModel> RandomForestModel::train(const Hyperparameters& hp, const Matrix& x,
                                                            std::span<const ClassId> y,
                                                            std::size_t classes, std::uint64_t seed,
                                                            std::string fingerprint) {
  const std::size_t n = x.rows();
  const auto n_trees = static_cast<long>(hp.rf_trees);
  std::vector<DecisionTree> trees(hp.rf_trees);
  // Each tree owns an RNG stream derived from (seed, tree index), so the
  // forest does not depend on the thread schedule.
#pragma omp parallel for schedule(dynamic)
  for (long t = 0; t < n_trees; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> sample(n);
    for (std::size_t i = 0; i < n; ++i) sample[i] = uniform_index(rng, n);
    TreeBuilder builder(x, y, classes, hp, rng);
    trees[static_cast<std::size_t>(t)] = builder.build(std::move(sample));
  }
  return std::make_unique<RandomForestModel>(hp, std::move(trees), classes, x.cols(),
                                             std::move(fingerprint));
}

void RandomForestModel::predict_proba_into(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& tree : trees_) {
    const auto dist = tree.leaf_distribution(x);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += dist[c];
  }
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (double& v : out) v *= inv;
}

void RandomForestModel::predict_proba_rows(std::span<const double> rows, std::size_t n,
                                           std::span<double> out) const {
  const std::size_t d = feature_count();
  const std::size_t c = class_count();
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n * c), 0.0);
  // Same per-row summation order as predict_proba_into: trees in sequence.
  for (const auto& tree : trees_) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto dist = tree.leaf_distribution(rows.subspan(i * d, d));
      double* o = out.data() + i * c;
      for (std::size_t k = 0; k < c; ++k) o[k] += dist[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t i = 0; i < n * c; ++i) out[i] *= inv;
}

nlohmann::json RandomForestModel::state() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : t.nodes) nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.leaf});
    trees.push_back({{"nodes", nodes}, {"leaf_values", t.leaf_values}});
  }
  return nlohmann::json{{"trees", trees}};
}

std::unique_ptr<RandomForestModel> RandomForestModel::from_state(const Hyperparameters& hp,
                                                                 std::size_t classes, std::size_t features,
                                                                 std::string fingerprint,
                                                                 const nlohmann::json& s) {
  std::vector<DecisionTree> trees;
  for (const auto& jt : s.at("trees")) {
    DecisionTree t;
    t.class_count = classes;
    for (const auto& jn : jt.at("nodes")) {
      t.nodes.push_back(TreeNode{jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(),
                                 jn.at(3).get<int>(), jn.at(4).get<int>()});
    }
    t.leaf_values = jt.at("leaf_values").get<std::vector<double>>();
    trees.push_back(std::move(t));
  }
  return std::make_unique<RandomForestModel>(hp, std::move(trees), classes, features, std::move(fingerprint));
}

}  // namespace cfshap

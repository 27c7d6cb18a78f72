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

#include "cfshap/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "cfshap/error.hpp"
#include "cfshap/random.hpp"

namespace cfshap {
namespace {

void check_point(const ValueFunctionSpec& spec, std::span<const double> point) {
  spec.validate();
  if (point.size() != spec.model->feature_count()) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch",
                "point has " + std::to_string(point.size()) + " features, model expects " +
                    std::to_string(spec.model->feature_count()));
  }
  for (double v : point) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite input");
  }
}

bool is_full(std::span<const std::uint8_t> coalition) {
  return std::all_of(coalition.begin(), coalition.end(), [](std::uint8_t b) { return b != 0; });
}

// Writes the coalition value into `out` (class_count entries). `z` and
// `probs` are scratch, grown to hold one row per background sample.
void evaluate_coalition(const ValueFunctionSpec& spec, std::span<const double> point,
                        std::span<const std::uint8_t> coalition, std::vector<double>& z,
                        std::vector<double>& probs, std::span<double> out) {
  const Classifier& model = *spec.model;
  if (is_full(coalition)) {
    model.predict_proba_into(point, out);
    return;
  }
  const std::size_t d = point.size();
  const std::size_t rows = spec.background.rows();
  const std::size_t classes = out.size();
  z.resize(rows * d);
  probs.resize(rows * classes);
  for (std::size_t b = 0; b < rows; ++b) {
    const auto row = spec.background.row(b);
    double* zb = z.data() + b * d;
    for (std::size_t j = 0; j < d; ++j) zb[j] = coalition[j] ? point[j] : row[j];
  }
  model.predict_proba_rows(z, rows, probs);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t b = 0; b < rows; ++b) {
    for (std::size_t c = 0; c < classes; ++c) out[c] += probs[b * classes + c];
  }
  const double inv = 1.0 / static_cast<double>(rows);
  for (double& v : out) v *= inv;
}

// 1 / (d * C(d-1, s)) = s! (d-s-1)! / d!
std::vector<double> shapley_weights(std::size_t d) {
  std::vector<double> w(d);
  double binom = 1.0;  // C(d-1, s)
  for (std::size_t s = 0; s < d; ++s) {
    w[s] = 1.0 / (static_cast<double>(d) * binom);
    binom = binom * static_cast<double>(d - 1 - s) / static_cast<double>(s + 1);
  }
  return w;
}

ShapleyMatrix make_result(const ValueFunctionSpec& spec, std::span<const double> point) {
  ShapleyMatrix sm;
  sm.phi = Matrix(spec.model->class_count(), point.size());
  sm.point.assign(point.begin(), point.end());
  sm.output = spec.model->predict_proba(point);
  return sm;
}

std::vector<std::vector<std::size_t>> draw_permutations(std::size_t d, std::size_t n,
                                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> perms(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (p % 2 == 1) {
      perms[p].assign(perms[p - 1].rbegin(), perms[p - 1].rend());
    } else {
      perms[p].resize(d);
      std::iota(perms[p].begin(), perms[p].end(), 0);
      shuffle(std::span<std::size_t>(perms[p]), rng);
    }
  }
  return perms;
}

// Redistributes r_c = output_c - base_c - sum_j phi_cj over features in
// proportion to |phi_cj| (uniformly when the row is all zero).
double restore_efficiency(ShapleyMatrix& sm) {
  double max_residual = 0.0;
  const std::size_t d = sm.phi.cols();
  for (std::size_t c = 0; c < sm.phi.rows(); ++c) {
    auto row = sm.phi.row(c);
    double sum = 0.0;
    double abs_sum = 0.0;
    for (double v : row) {
      sum += v;
      abs_sum += std::abs(v);
    }
    const double residual = sm.output[c] - sm.base_values[c] - sum;
    max_residual = std::max(max_residual, std::abs(residual));
    for (std::size_t j = 0; j < d; ++j) {
      row[j] += abs_sum > 0.0 ? residual * std::abs(row[j]) / abs_sum
                              : residual / static_cast<double>(d);
    }
  }
  return max_residual;
}

// Accumulates per-permutation marginal contributions in permutation order.
// `value_of` maps a coalition to its value vector.
template <typename ValueOf>
void accumulate_permutations(const std::vector<std::vector<std::size_t>>& perms, ShapleyMatrix& sm,
                             ValueOf&& value_of) {
  const std::size_t d = sm.phi.cols();
  const std::size_t classes = sm.phi.rows();
  CoalitionMask mask(d, 0);
  std::vector<double> prev(classes);
  std::vector<double> cur(classes);
  for (const auto& perm : perms) {
    std::fill(mask.begin(), mask.end(), 0);
    prev = sm.base_values;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t j = perm[k];
      mask[j] = 1;
      value_of(mask, cur);
      for (std::size_t c = 0; c < classes; ++c) sm.phi(c, j) += cur[c] - prev[c];
      prev.swap(cur);
    }
  }
  const double inv = 1.0 / static_cast<double>(perms.size());
  for (double& v : sm.phi.data()) v *= inv;
}

}  // namespace

void ValueFunctionSpec::validate() const {
  if (model == nullptr) throw Error(ErrorCode::kInvalidArgument, "value function has no model");
  if (background.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "background is empty");
  if (background.cols() != model->feature_count()) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch",
                "background width differs from model feature count");
  }
}

std::vector<double> coalition_value(const ValueFunctionSpec& spec, std::span<const double> point,
                                    std::span<const std::uint8_t> coalition) {
  check_point(spec, point);
  if (coalition.size() != point.size()) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch", "coalition mask length");
  }
  std::vector<double> z(point.size());
  std::vector<double> probs(spec.model->class_count());
  std::vector<double> out(spec.model->class_count());
  evaluate_coalition(spec, point, coalition, z, probs, out);
  return out;
}

ShapleyMatrix shapley_exact(const ValueFunctionSpec& spec, std::span<const double> point,
                            std::size_t dimension_cap) {
  check_point(spec, point);
  const std::size_t d = point.size();
  if (d > dimension_cap || d >= 63) {
    throw Error(ErrorCode::kInvalidArgument, "dimension above exact cap; use sampled mode",
                std::to_string(d) + " > " + std::to_string(dimension_cap));
  }
  const std::size_t classes = spec.model->class_count();
  const std::size_t n_masks = std::size_t{1} << d;
  std::vector<double> values(n_masks * classes);

  // Every coalition value is independent, so the parallel loop writes
  // disjoint slots and the result does not depend on the thread count.
#pragma omp parallel
  {
    CoalitionMask coalition(d);
    std::vector<double> z(d);
    std::vector<double> probs(classes);
#pragma omp for schedule(static)
    for (long long m = 0; m < static_cast<long long>(n_masks); ++m) {
      for (std::size_t j = 0; j < d; ++j) coalition[j] = (static_cast<std::uint64_t>(m) >> j) & 1U;
      evaluate_coalition(spec, point, coalition, z, probs,
                         std::span<double>(values.data() + static_cast<std::size_t>(m) * classes, classes));
    }
  }

  ShapleyMatrix sm = make_result(spec, point);
  sm.base_values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(classes));
  const auto weights = shapley_weights(d);
  for (std::size_t j = 0; j < d; ++j) {
    const std::uint64_t bit = std::uint64_t{1} << j;
    for (std::uint64_t m = 0; m < n_masks; ++m) {
      if (m & bit) continue;
      const double w = weights[static_cast<std::size_t>(std::popcount(m))];
      const double* with = values.data() + (m | bit) * classes;
      const double* without = values.data() + m * classes;
      for (std::size_t c = 0; c < classes; ++c) sm.phi(c, j) += w * (with[c] - without[c]);
    }
  }
  sm.method = {ShapleyMethod::Kind::kExact, 0, 0, 0.0};
  return sm;
}

ShapleyMatrix shapley_exact_serial(const ValueFunctionSpec& spec, std::span<const double> point) {
  check_point(spec, point);
  const std::size_t d = point.size();
  if (d >= 63) throw Error(ErrorCode::kInvalidArgument, "dimension too large for enumeration");
  const std::size_t classes = spec.model->class_count();
  ShapleyMatrix sm = make_result(spec, point);
  sm.base_values = coalition_value(spec, point, CoalitionMask(d, 0));
  const auto weights = shapley_weights(d);
  CoalitionMask without(d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << d); ++m) {
      if (m & (std::uint64_t{1} << j)) continue;
      for (std::size_t q = 0; q < d; ++q) without[q] = (m >> q) & 1U;
      CoalitionMask with = without;
      with[j] = 1;
      const auto v_with = coalition_value(spec, point, with);
      const auto v_without = coalition_value(spec, point, without);
      const double w = weights[static_cast<std::size_t>(std::popcount(m))];
      for (std::size_t c = 0; c < classes; ++c) sm.phi(c, j) += w * (v_with[c] - v_without[c]);
    }
  }
  sm.method = {ShapleyMethod::Kind::kExact, 0, 0, 0.0};
  return sm;
}

ShapleyMatrix shapley_sampled(const ValueFunctionSpec& spec, std::span<const double> point,
                              std::size_t n_permutations, std::uint64_t seed) {
  check_point(spec, point);
  if (n_permutations == 0) throw Error(ErrorCode::kInvalidArgument, "n_permutations must be >= 1");
  const std::size_t d = point.size();
  const std::size_t classes = spec.model->class_count();
  const auto perms = draw_permutations(d, n_permutations, seed);

  // Collect the distinct coalitions the permutations visit, evaluate them
  // once each in parallel, then replay the permutations serially.
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::string> coalitions;
  {
    std::string key(d, '\0');
    for (const auto& perm : perms) {
      std::fill(key.begin(), key.end(), '\0');
      for (std::size_t k = 0; k < d; ++k) {
        key[perm[k]] = '\1';
        if (slot.try_emplace(key, coalitions.size()).second) coalitions.push_back(key);
      }
    }
  }
  std::vector<double> values(coalitions.size() * classes);
#pragma omp parallel
  {
    std::vector<double> z(d);
    std::vector<double> probs(classes);
#pragma omp for schedule(dynamic, 16)
    for (long long i = 0; i < static_cast<long long>(coalitions.size()); ++i) {
      const auto& key = coalitions[static_cast<std::size_t>(i)];
      const std::span<const std::uint8_t> mask(reinterpret_cast<const std::uint8_t*>(key.data()), d);
      evaluate_coalition(spec, point, mask, z, probs,
                         std::span<double>(values.data() + static_cast<std::size_t>(i) * classes, classes));
    }
  }

  ShapleyMatrix sm = make_result(spec, point);
  sm.base_values = coalition_value(spec, point, CoalitionMask(d, 0));
  std::string key(d, '\0');
  accumulate_permutations(perms, sm, [&](const CoalitionMask& mask, std::vector<double>& out) {
    for (std::size_t j = 0; j < d; ++j) key[j] = static_cast<char>(mask[j]);
    const double* v = values.data() + slot.at(key) * classes;
    std::copy(v, v + classes, out.begin());
  });
  sm.method = {ShapleyMethod::Kind::kSampled, n_permutations, seed, restore_efficiency(sm)};
  return sm;
}

ShapleyMatrix shapley_sampled_serial(const ValueFunctionSpec& spec, std::span<const double> point,
                                     std::size_t n_permutations, std::uint64_t seed) {
  check_point(spec, point);
  if (n_permutations == 0) throw Error(ErrorCode::kInvalidArgument, "n_permutations must be >= 1");
  const std::size_t d = point.size();
  const auto perms = draw_permutations(d, n_permutations, seed);
  ShapleyMatrix sm = make_result(spec, point);
  sm.base_values = coalition_value(spec, point, CoalitionMask(d, 0));
  accumulate_permutations(perms, sm, [&](const CoalitionMask& mask, std::vector<double>& out) {
    out = coalition_value(spec, point, mask);
  });
  sm.method = {ShapleyMethod::Kind::kSampled, n_permutations, seed, restore_efficiency(sm)};
  return sm;
}

ShapleyMatrix explain_point(const ValueFunctionSpec& spec, std::span<const double> point,
                            const ShapleyConfig& config) {
  const bool exact_allowed = config.mode != ShapleyConfig::Mode::kSampled;
  if (config.mode == ShapleyConfig::Mode::kExact ||
      (exact_allowed && point.size() <= config.exact_dimension_cap)) {
    return shapley_exact(spec, point, config.exact_dimension_cap);
  }
  return shapley_sampled(spec, point, config.n_permutations, config.seed);
}

Matrix select_background(const Matrix& train, std::span<const ClassId> labels, std::size_t classes,
                         std::size_t max_rows, std::uint64_t seed) {
  const std::size_t n = train.rows();
  if (max_rows == 0 || max_rows >= n) return train;

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  // Largest-remainder allocation of max_rows across classes.
  std::vector<std::size_t> quota(classes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = static_cast<double>(max_rows) * static_cast<double>(by_class[c].size()) /
                         static_cast<double>(n);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; assigned < max_rows && r < remainders.size(); ++r) {
    const std::size_t c = remainders[r].second;
    if (quota[c] < by_class[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < classes; ++c) {
    shuffle(std::span<std::size_t>(by_class[c]), rng);
    chosen.insert(chosen.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(chosen.begin(), chosen.end());
  return train.select_rows(chosen);
}

}  // namespace cfshap

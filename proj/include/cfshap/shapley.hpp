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

#ifndef CFSHAP_SHAPLEY_HPP_
#define CFSHAP_SHAPLEY_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cfshap/classifier.hpp"
#include "cfshap/matrix.hpp"

namespace cfshap {

// Interventional value function: features outside a coalition take their
// values from each background row in turn and the model output is averaged.
struct ValueFunctionSpec {
  const Classifier* model = nullptr;
  Matrix background;

  void validate() const;
};

// Coalition membership, one byte per feature (0 = absent).
using CoalitionMask = std::vector<std::uint8_t>;

struct ShapleyMethod {
  enum class Kind { kExact, kSampled };
  Kind kind = Kind::kExact;
  std::size_t n_permutations = 0;
  std::uint64_t seed = 0;
  // Largest |residual| over classes that was redistributed to restore
  // efficiency (sampled mode only).
  double max_residual = 0.0;
};

// Per-class attributions: phi is class_count x feature_count.
struct ShapleyMatrix {
  Matrix phi;
  std::vector<double> base_values;
  std::vector<double> output;  // model probabilities at `point`
  ShapleyMethod method;
  FeatureVector point;

  std::size_t class_count() const { return phi.rows(); }
  std::size_t feature_count() const { return phi.cols(); }
  std::span<const double> for_class(ClassId c) const { return phi.row(static_cast<std::size_t>(c)); }
};

inline constexpr std::size_t kExactDimensionCap = 15;

// Mean model output over the background with `point` values on the
// coalition. The full coalition returns the model output at `point` itself.
std::vector<double> coalition_value(const ValueFunctionSpec& spec, std::span<const double> point,
                                    std::span<const std::uint8_t> coalition);

// Exact Shapley values by enumerating all 2^d coalitions. Coalition values
// are evaluated in parallel and combined in a fixed order.
ShapleyMatrix shapley_exact(const ValueFunctionSpec& spec, std::span<const double> point,
                            std::size_t dimension_cap = kExactDimensionCap);

// Single-threaded textbook form of the same sum; reference for tests and
// benchmarks.
ShapleyMatrix shapley_exact_serial(const ValueFunctionSpec& spec, std::span<const double> point);

// Permutation-sampling estimate with antithetic pairs (each odd-numbered
// permutation is the reverse of its predecessor). Efficiency is restored by
// spreading the residual over features in proportion to |phi|.
ShapleyMatrix shapley_sampled(const ValueFunctionSpec& spec, std::span<const double> point,
                              std::size_t n_permutations, std::uint64_t seed);

// Same permutations evaluated serially without the coalition cache.
ShapleyMatrix shapley_sampled_serial(const ValueFunctionSpec& spec, std::span<const double> point,
                                     std::size_t n_permutations, std::uint64_t seed);

struct ShapleyConfig {
  enum class Mode { kAuto, kExact, kSampled };
  Mode mode = Mode::kAuto;
  std::size_t n_permutations = 2000;
  std::uint64_t seed = 42;
  std::size_t exact_dimension_cap = kExactDimensionCap;
  std::size_t background_size = 100;  // 0 keeps the full training set
};

// Exact when allowed and d is within the cap, sampled otherwise.
ShapleyMatrix explain_point(const ValueFunctionSpec& spec, std::span<const double> point,
                            const ShapleyConfig& config);

// Deterministic class-stratified subsample of at most `max_rows` training
// rows (all rows when max_rows is 0 or not smaller than the row count).
Matrix select_background(const Matrix& train, std::span<const ClassId> labels, std::size_t classes,
                         std::size_t max_rows, std::uint64_t seed);

}  // namespace cfshap

#endif  // CFSHAP_SHAPLEY_HPP_

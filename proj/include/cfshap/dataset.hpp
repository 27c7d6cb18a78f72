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

#ifndef CFSHAP_DATASET_HPP_
#define CFSHAP_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cfshap/matrix.hpp"

namespace cfshap {

enum class FeatureKind { kContinuous, kInteger };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

// Per-feature affine map used to produce standardized values:
// stored = (raw - mean) / scale.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  FeatureVector apply(std::span<const double> raw) const;
  FeatureVector invert(std::span<const double> standardized) const;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

// Tabular classification data. Immutable once validated.
struct Dataset {
  std::string name;
  std::vector<FeatureSpec> features;
  Matrix points;
  std::vector<ClassId> labels;
  std::vector<std::string> class_names;
  std::optional<Standardization> standardization;

  std::size_t num_rows() const { return points.rows(); }
  std::size_t num_features() const { return features.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  std::vector<std::string> feature_names() const;

  // Throws kDataError when a structural invariant is broken.
  void validate() const;
};

struct Split {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
  double ratio = 0.0;

  friend bool operator==(const Split&, const Split&) = default;
};

// Label column selected by header name or by zero-based column index.
using LabelColumn = std::variant<std::string, std::size_t>;

// Parses a comma-delimited CSV with a header row. Class ids follow first
// appearance in the label column unless `class_names` is given, in which
// case each label cell must equal one of the names.
Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column,
                 const std::optional<std::vector<std::string>>& class_names = std::nullopt);

// Returns a copy with every column mapped to zero mean and unit population
// standard deviation over the training rows of `fit_on`.
Dataset standardize(const Dataset& ds, const Split& fit_on);

// Raw-unit copy of a standardized dataset.
Dataset inverse_standardize(const Dataset& ds);

Split split(const Dataset& ds, double ratio, std::uint64_t seed, bool stratified);

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr double kDefaultSplitRatio = 0.8;

// A vendored dataset described by `<name>.manifest.json` in a data directory.
struct DatasetManifest {
  std::string name;
  std::string csv;
  std::string label_column;
  std::vector<std::string> class_names;
  std::string sha256;
  std::string source;
};

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

// Lists manifests in `data_dir`, sorted by name.
std::vector<DatasetManifest> list_manifests(const std::filesystem::path& data_dir);

// Loads a registered dataset after checking the CSV checksum.
Dataset load_registered(const std::filesystem::path& data_dir, const std::string& name);

// Directory of the vendored datasets in the source tree.
std::filesystem::path default_data_dir();

}  // namespace cfshap

#endif  // CFSHAP_DATASET_HPP_

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

#include "cfshap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cfshap/error.hpp"
#include "cfshap/fingerprint.hpp"
#include "cfshap/random.hpp"
#include "json.hpp"

namespace cfshap {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double quotes delimit fields that may contain
// commas; a doubled quote inside them is a literal quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::optional<double> parse_real(const std::string& cell) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

FeatureVector Standardization::apply(std::span<const double> raw) const {
  if (raw.size() != mean.size()) {
    throw Error(ErrorCode::kInvalidArgument, "feature vector has wrong dimension");
  }
  FeatureVector out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - mean[j]) / scale[j];
  return out;
}

FeatureVector Standardization::invert(std::span<const double> standardized) const {
  if (standardized.size() != mean.size()) {
    throw Error(ErrorCode::kInvalidArgument, "feature vector has wrong dimension");
  }
  FeatureVector out(standardized.size());
  for (std::size_t j = 0; j < standardized.size(); ++j) {
    out[j] = standardized[j] * scale[j] + mean[j];
  }
  return out;
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(features.size());
  for (const auto& f : features) names.push_back(f.name);
  return names;
}

void Dataset::validate() const {
  if (features.empty()) throw Error(ErrorCode::kDataError, "dataset has no features");
  if (points.cols() != features.size()) {
    throw Error(ErrorCode::kDataError, "point width does not match feature count");
  }
  if (points.rows() != labels.size()) {
    throw Error(ErrorCode::kDataError, "row count does not match label count");
  }
  if (class_names.size() < 2) throw Error(ErrorCode::kDataError, "fewer than 2 classes");
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (f.name.empty()) throw Error(ErrorCode::kDataError, "empty feature name");
    if (!seen.insert(f.name).second) {
      throw Error(ErrorCode::kDataError, "duplicate feature names", f.name);
    }
  }
  std::vector<bool> present(class_names.size(), false);
  for (ClassId y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_names.size()) {
      throw Error(ErrorCode::kDataError, "label out of range", std::to_string(y));
    }
    present[static_cast<std::size_t>(y)] = true;
  }
  for (std::size_t c = 0; c < present.size(); ++c) {
    if (!present[c]) {
      throw Error(ErrorCode::kDataError, "class has no members", class_names[c]);
    }
  }
  if (standardization && (standardization->mean.size() != features.size() ||
                          standardization->scale.size() != features.size())) {
    throw Error(ErrorCode::kDataError, "standardization record has wrong dimension");
  }
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column,
                 const std::optional<std::vector<std::string>>& class_names) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "missing file", path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kDataError, "missing header row", path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_record(line);

  std::size_t label_index = 0;
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) {
      throw Error(ErrorCode::kInvalidArgument, "label column not found", *name);
    }
    label_index = static_cast<std::size_t>(it - header.begin());
  } else {
    label_index = std::get<std::size_t>(label_column);
    if (label_index >= header.size()) {
      throw Error(ErrorCode::kInvalidArgument, "label column index out of range",
                  std::to_string(label_index));
    }
  }
  if (header.size() < 2) throw Error(ErrorCode::kDataError, "need at least one feature column");

  Dataset ds;
  ds.name = path.stem().string();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index) ds.features.push_back({header[c], FeatureKind::kInteger});
  }
  {
    std::set<std::string> seen;
    for (const auto& f : ds.features) {
      if (f.name.empty()) throw Error(ErrorCode::kDataError, "empty feature name");
      if (!seen.insert(f.name).second) {
        throw Error(ErrorCode::kDataError, "duplicate feature names", f.name);
      }
    }
  }

  std::map<std::string, ClassId> class_ids;
  if (class_names) {
    for (std::size_t i = 0; i < class_names->size(); ++i) {
      class_ids.emplace((*class_names)[i], static_cast<ClassId>(i));
    }
    ds.class_names = *class_names;
  }

  const std::size_t d = ds.features.size();
  std::vector<double> row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_record(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kDataError, "wrong number of cells",
                  "row " + std::to_string(line_no));
    }
    std::size_t j = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_index) continue;
      auto value = parse_real(cells[c]);
      if (!value) {
        throw Error(ErrorCode::kDataError, "non-numeric cell",
                    "row " + std::to_string(line_no) + ", column " + header[c]);
      }
      row[j++] = *value;
    }
    const std::string& label = cells[label_index];
    auto it = class_ids.find(label);
    if (it == class_ids.end()) {
      if (class_names) {
        throw Error(ErrorCode::kDataError, "label not among class names",
                    "row " + std::to_string(line_no) + ": " + label);
      }
      it = class_ids.emplace(label, static_cast<ClassId>(ds.class_names.size())).first;
      ds.class_names.push_back(label);
    }
    ds.points.append_row(row);
    ds.labels.push_back(it->second);
  }
  if (ds.points.cols() == 0) ds.points = Matrix(0, d);

  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < ds.points.rows(); ++i) {
      const double v = ds.points(i, j);
      if (v != std::trunc(v)) {
        ds.features[j].kind = FeatureKind::kContinuous;
        break;
      }
    }
  }
  ds.validate();
  return ds;
}

Dataset standardize(const Dataset& ds, const Split& fit_on) {
  if (ds.standardization) {
    throw Error(ErrorCode::kInvalidArgument, "dataset is already standardized", ds.name);
  }
  if (fit_on.train_indices.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "split has no training rows");
  }
  const std::size_t d = ds.num_features();
  Standardization st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const double n = static_cast<double>(fit_on.train_indices.size());
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i : fit_on.train_indices) sum += ds.points(i, j);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i : fit_on.train_indices) {
      const double dev = ds.points(i, j) - mean;
      ss += dev * dev;
    }
    const double scale = std::sqrt(ss / n);
    if (!(scale > 0.0)) {
      throw Error(ErrorCode::kDataError, "zero-variance column", ds.features[j].name);
    }
    st.mean[j] = mean;
    st.scale[j] = scale;
  }

  Dataset out = ds;
  for (std::size_t i = 0; i < out.points.rows(); ++i) {
    auto r = out.points.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - st.mean[j]) / st.scale[j];
  }
  out.standardization = std::move(st);
  return out;
}

Dataset inverse_standardize(const Dataset& ds) {
  if (!ds.standardization) return ds;
  Dataset out = ds;
  const auto& st = *ds.standardization;
  for (std::size_t i = 0; i < out.points.rows(); ++i) {
    auto r = out.points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = r[j] * st.scale[j] + st.mean[j];
  }
  out.standardization.reset();
  return out;
}

Split split(const Dataset& ds, double ratio, std::uint64_t seed, bool stratified) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ratio out of range", std::to_string(ratio));
  }
  const std::size_t n = ds.num_rows();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 rows to split");

  Rng rng(seed);
  Split s;
  s.seed = seed;
  s.ratio = ratio;

  auto take = [&](std::vector<std::size_t>& members) {
    shuffle(std::span<std::size_t>(members), rng);
    const auto m = static_cast<long long>(members.size());
    const long long n_train = std::clamp<long long>(std::llround(ratio * static_cast<double>(m)), 1, m - 1);
    s.train_indices.insert(s.train_indices.end(), members.begin(), members.begin() + n_train);
    s.test_indices.insert(s.test_indices.end(), members.begin() + n_train, members.end());
  };

  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].size() < 2) {
        throw Error(ErrorCode::kInvalidArgument, "class too small for stratification",
                    ds.class_names[c]);
      }
    }
    for (auto& members : by_class) take(members);
  } else {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    take(all);
  }
  std::sort(s.train_indices.begin(), s.train_indices.end());
  std::sort(s.test_indices.begin(), s.test_indices.end());
  return s;
}

DatasetManifest read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kNotFound, "missing manifest", manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.csv = j.at("csv").get<std::string>();
    m.label_column = j.at("label_column").get<std::string>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.sha256 = j.at("sha256").get<std::string>();
    m.source = j.value("source", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDataError, "malformed manifest", manifest_path.string() + ": " + e.what());
  }
}

std::vector<DatasetManifest> list_manifests(const std::filesystem::path& data_dir) {
  std::vector<DatasetManifest> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir, ec)) {
    const std::string file = entry.path().filename().string();
    constexpr std::string_view kSuffix = ".manifest.json";
    if (file.size() > kSuffix.size() &&
        file.compare(file.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
      out.push_back(read_manifest(entry.path()));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

Dataset load_registered(const std::filesystem::path& data_dir, const std::string& name) {
  const auto manifest_path = data_dir / (name + ".manifest.json");
  if (!std::filesystem::exists(manifest_path)) {
    throw Error(ErrorCode::kNotFound, "unknown dataset", name);
  }
  const auto m = read_manifest(manifest_path);
  const auto csv_path = data_dir / m.csv;
  const auto digest = sha256_file_hex(csv_path.string());
  if (digest != m.sha256) {
    throw Error(ErrorCode::kDataError, "checksum mismatch", csv_path.string());
  }
  Dataset ds = load_csv(csv_path, m.label_column, m.class_names);
  ds.name = m.name;
  return ds;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("CFSHAP_DATA_DIR"); env && *env) return env;
#ifdef CFSHAP_DATA_DIR
  return CFSHAP_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace cfshap

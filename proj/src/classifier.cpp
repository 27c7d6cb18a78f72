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

#include "cfshap/classifier.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "cfshap/error.hpp"
#include "cfshap/fingerprint.hpp"
#include "cfshap/models.hpp"
#include "json.hpp"

namespace cfshap {

using nlohmann::json;

ClassId argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<ClassId>(best);
}

std::vector<double> Classifier::predict_proba(std::span<const double> x) const {
  if (x.size() != feature_count()) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch",
                "expected " + std::to_string(feature_count()) + " features, got " +
                    std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite input");
  }
  std::vector<double> out(class_count());
  predict_proba_into(x, out);
  return out;
}

ClassId Classifier::predict(std::span<const double> x) const {
  return argmax_lowest(predict_proba(x));
}

void Classifier::predict_proba_rows(std::span<const double> rows, std::size_t n, std::span<double> out) const {
  const std::size_t d = feature_count();
  const std::size_t c = class_count();
  for (std::size_t i = 0; i < n; ++i) predict_proba_into(rows.subspan(i * d, d), out.subspan(i * c, c));
}

ClassId Classifier::predict_unchecked(std::span<const double> x) const {
  // Small fixed buffer avoids an allocation per call on the search paths.
  constexpr std::size_t kInline = 16;
  const std::size_t c = class_count();
  if (c <= kInline) {
    double buf[kInline];
    predict_proba_into(x, std::span<double>(buf, c));
    return argmax_lowest(std::span<const double>(buf, c));
  }
  std::vector<double> out(c);
  predict_proba_into(x, out);
  return argmax_lowest(out);
}

std::string_view family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kKnn:
      return "knn";
    case ModelFamily::kRandomForest:
      return "rf";
    case ModelFamily::kNeuralNet:
      return "nn";
    case ModelFamily::kLinearSvm:
      return "svm";
  }
  return "unknown";
}

ModelFamily parse_family(std::string_view name) {
  if (name == "knn") return ModelFamily::kKnn;
  if (name == "rf") return ModelFamily::kRandomForest;
  if (name == "nn") return ModelFamily::kNeuralNet;
  if (name == "svm") return ModelFamily::kLinearSvm;
  throw Error(ErrorCode::kInvalidArgument, "unknown model family", std::string(name));
}

void Hyperparameters::validate(ModelFamily family) const {
  auto bad = [](const char* what) { throw Error(ErrorCode::kInvalidArgument, "invalid hyperparameters", what); };
  switch (family) {
    case ModelFamily::kKnn:
      if (knn_k == 0) bad("knn_k must be >= 1");
      break;
    case ModelFamily::kRandomForest:
      if (rf_trees == 0) bad("rf_trees must be >= 1");
      if (rf_max_depth == 0) bad("rf_max_depth must be >= 1");
      if (rf_min_samples_split < 2) bad("rf_min_samples_split must be >= 2");
      break;
    case ModelFamily::kNeuralNet:
      if (nn_hidden == 0) bad("nn_hidden must be >= 1");
      if (!(nn_l2 >= 0.0)) bad("nn_l2 must be >= 0");
      if (!(nn_tolerance > 0.0)) bad("nn_tolerance must be > 0");
      if (nn_max_iterations == 0) bad("nn_max_iterations must be >= 1");
      if (nn_history == 0) bad("nn_history must be >= 1");
      break;
    case ModelFamily::kLinearSvm:
      if (!(svm_lambda > 0.0)) bad("svm_lambda must be > 0");
      if (svm_iterations == 0) bad("svm_iterations must be >= 1");
      break;
  }
}

namespace {

json hyperparameters_to_json(const Hyperparameters& hp) {
  return json{{"knn_k", hp.knn_k},
              {"rf_trees", hp.rf_trees},
              {"rf_max_depth", hp.rf_max_depth},
              {"rf_min_samples_split", hp.rf_min_samples_split},
              {"rf_max_features", hp.rf_max_features},
              {"nn_hidden", hp.nn_hidden},
              {"nn_l2", hp.nn_l2},
              {"nn_tolerance", hp.nn_tolerance},
              {"nn_max_iterations", hp.nn_max_iterations},
              {"nn_history", hp.nn_history},
              {"svm_lambda", hp.svm_lambda},
              {"svm_iterations", hp.svm_iterations}};
}

Hyperparameters hyperparameters_from_json(const json& j) {
  Hyperparameters hp;
  hp.knn_k = j.at("knn_k");
  hp.rf_trees = j.at("rf_trees");
  hp.rf_max_depth = j.at("rf_max_depth");
  hp.rf_min_samples_split = j.at("rf_min_samples_split");
  hp.rf_max_features = j.at("rf_max_features");
  hp.nn_hidden = j.at("nn_hidden");
  hp.nn_l2 = j.at("nn_l2");
  hp.nn_tolerance = j.at("nn_tolerance");
  hp.nn_max_iterations = j.at("nn_max_iterations");
  hp.nn_history = j.at("nn_history");
  hp.svm_lambda = j.at("svm_lambda");
  hp.svm_iterations = j.at("svm_iterations");
  return hp;
}

}  // namespace

std::string training_fingerprint(ModelFamily family, const Hyperparameters& hp, const Matrix& x,
                                 std::span<const ClassId> y, std::size_t num_classes,
                                 std::uint64_t seed) {
  Fingerprint fp;
  fp.add(family_name(family)).add(hyperparameters_to_json(hp).dump()).add(seed);
  fp.add(static_cast<std::uint64_t>(num_classes)).add(static_cast<std::uint64_t>(x.cols()));
  fp.add(std::span<const double>(x.data())).add(y);
  return fp.hex();
}

std::unique_ptr<Model> fit(ModelFamily family, const Matrix& x, std::span<const ClassId> y,
                           std::size_t num_classes, const Hyperparameters& hp, std::uint64_t seed) {
  hp.validate(family);
  if (x.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "training rows and labels differ in length");
  }
  std::vector<bool> present(num_classes, false);
  for (ClassId c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range", std::to_string(c));
    }
    present[static_cast<std::size_t>(c)] = true;
  }
  std::size_t distinct = 0;
  for (bool p : present) distinct += p ? 1 : 0;
  if (num_classes < 2 || distinct < 2) {
    throw Error(ErrorCode::kInvalidArgument, "degenerate training set: fewer than 2 classes");
  }

  auto fingerprint = training_fingerprint(family, hp, x, y, num_classes, seed);
  switch (family) {
    case ModelFamily::kKnn:
      return std::make_unique<KnnModel>(hp, x, std::vector<ClassId>(y.begin(), y.end()), num_classes,
                                        std::move(fingerprint));
    case ModelFamily::kRandomForest:
      return RandomForestModel::train(hp, x, y, num_classes, seed, std::move(fingerprint));
    case ModelFamily::kNeuralNet:
      return NeuralNetModel::train(hp, x, y, num_classes, seed, std::move(fingerprint));
    case ModelFamily::kLinearSvm:
      return LinearSvmModel::train(hp, x, y, num_classes, std::move(fingerprint));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model family");
}

void save_model(const Model& model, std::ostream& out) {
  json j{{"format", "cfshap-model"},
         {"version", kModelFormatVersion},
         {"family", family_name(model.family())},
         {"hyperparameters", hyperparameters_to_json(model.hyperparameters())},
         {"class_count", model.class_count()},
         {"feature_count", model.feature_count()},
         {"fingerprint", model.fingerprint()}};
  if (const auto* m = dynamic_cast<const KnnModel*>(&model)) {
    j["state"] = m->state();
  } else if (const auto* m = dynamic_cast<const RandomForestModel*>(&model)) {
    j["state"] = m->state();
  } else if (const auto* m = dynamic_cast<const NeuralNetModel*>(&model)) {
    j["state"] = json{{"params", m->parameters()}};
  } else if (const auto* m = dynamic_cast<const LinearSvmModel*>(&model)) {
    j["state"] = json{{"weights", m->weights()}, {"bias", m->bias()}};
  } else {
    throw Error(ErrorCode::kInvalidArgument, "model type cannot be serialized");
  }
  out << j.dump() << '\n';
}

std::unique_ptr<Model> load_model(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataError, "malformed model file", e.what());
  }
  if (j.value("format", "") != "cfshap-model") {
    throw Error(ErrorCode::kDataError, "not a model file");
  }
  if (j.value("version", -1) != kModelFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported model format version",
                std::to_string(j.value("version", -1)));
  }
  try {
    const ModelFamily family = parse_family(j.at("family").get<std::string>());
    const Hyperparameters hp = hyperparameters_from_json(j.at("hyperparameters"));
    const std::size_t classes = j.at("class_count");
    const std::size_t features = j.at("feature_count");
    std::string fingerprint = j.at("fingerprint");
    const json& s = j.at("state");
    switch (family) {
      case ModelFamily::kKnn:
        return KnnModel::from_state(hp, classes, std::move(fingerprint), s);
      case ModelFamily::kRandomForest:
        return RandomForestModel::from_state(hp, classes, features, std::move(fingerprint), s);
      case ModelFamily::kNeuralNet:
        return std::make_unique<NeuralNetModel>(hp, classes, features,
                                                s.at("params").get<std::vector<double>>(),
                                                std::move(fingerprint));
      case ModelFamily::kLinearSvm:
        return std::make_unique<LinearSvmModel>(hp, classes, features,
                                                s.at("weights").get<std::vector<double>>(),
                                                s.at("bias").get<std::vector<double>>(),
                                                std::move(fingerprint));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataError, "malformed model file", e.what());
  }
  throw Error(ErrorCode::kDataError, "malformed model file");
}

void softmax_inplace(std::span<double> values) {
  double top = values[0];
  for (double v : values) top = std::max(top, v);
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

}  // namespace cfshap

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


#include <gtest/gtest.h>

#include <sstream>

#include "cfshap/evaluation.hpp"
#include "cfshap/random.hpp"
#include "test_support.hpp"

namespace cfshap {
namespace {

using testing::StubClassifier;

StubClassifier constant_model(std::size_t classes, std::size_t d, ClassId c) {
  return StubClassifier(classes, d, [c](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(c)] = 1.0;
  });
}

Dataset dataset_with(std::size_t rows, std::size_t classes, std::size_t d, std::uint64_t seed) {
  Dataset ds;
  ds.name = "synthetic";
  for (std::size_t j = 0; j < d; ++j) ds.features.push_back({"x" + std::to_string(j)});
  for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  Rng rng(seed);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = uniform_unit(rng);
    ds.points.append_row(row);
    ds.labels.push_back(static_cast<ClassId>(i % classes));
  }
  return ds;
}

std::vector<std::size_t> first_rows(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

TEST(EnumerateQueries, CountsFollowClassesMinusOne) {
  const Dataset three = dataset_with(30, 3, 2, 1);
  const auto m3 = constant_model(3, 2, 1);
  const auto q3 = enumerate_queries(three, first_rows(30), m3);
  EXPECT_EQ(q3.size(), 60u);
  for (const auto& q : q3) {
    EXPECT_EQ(q.predicted, 1);
    EXPECT_NE(q.desired, 1);
  }
  const Dataset two = dataset_with(10, 2, 2, 2);
  EXPECT_EQ(enumerate_queries(two, first_rows(10), constant_model(2, 2, 0)).size(), 10u);
  const Dataset four = dataset_with(4, 4, 2, 3);
  const auto q4 = enumerate_queries(four, first_rows(1), constant_model(4, 2, 2));
  ASSERT_EQ(q4.size(), 3u);
  EXPECT_EQ(q4[0].desired, 0);
  EXPECT_EQ(q4[1].desired, 1);
  EXPECT_EQ(q4[2].desired, 3);
}

TEST(CountCommon, Cases) {
  const Dataset ds = dataset_with(20, 2, 3, 4);
  std::vector<FeatureVector> copies;
  for (std::size_t i = 0; i < 20; i += 2) copies.push_back(ds.points.row_vector(i));
  EXPECT_EQ(count_common(copies, ds), copies.size());
  EXPECT_EQ(count_common({}, ds), 0u);
  FeatureVector moved = ds.points.row_vector(3);
  moved[2] += 1e-3;
  EXPECT_EQ(count_common({ds.points.row_vector(5), moved}, ds), 1u);
  FeatureVector close = ds.points.row_vector(7);
  close[0] += 5e-10;
  EXPECT_EQ(count_common({close}, ds), 1u);
}

TEST(CountCommon, AgreesWithLinearScan) {
  Dataset ds = dataset_with(200, 2, 3, 5);
  // Round to a coarse grid so first-coordinate ties are common.
  for (auto& v : ds.points.data()) v = std::round(v * 4) / 4;
  Rng rng(6);
  std::vector<FeatureVector> pts;
  for (int i = 0; i < 300; ++i) {
    FeatureVector p(3);
    for (auto& v : p) v = static_cast<double>(uniform_index(rng, 5)) / 4;
    pts.push_back(p);
  }
  std::size_t expected = 0;
  for (const auto& p : pts) {
    for (std::size_t r = 0; r < ds.num_rows(); ++r) {
      if (std::equal(p.begin(), p.end(), ds.points.row(r).begin())) {
        ++expected;
        break;
      }
    }
  }
  EXPECT_EQ(count_common(pts, ds), expected);
}

EvaluationReport sample_report(ModelFamily family, std::size_t cfs, std::size_t cps, std::size_t queries) {
  EvaluationReport r;
  r.dataset = "iris";
  r.model = family;
  r.total_queries = queries;
  r.cfs = cfs;
  r.cps = cps;
  r.raw_cfs = cfs + 3;
  r.ratio = 100.0 * cps / std::max<std::size_t>(cfs, 1);
  r.avg = static_cast<double>(cfs) / queries;
  r.config_fingerprint = std::string(64, 'a');
  return r;
}

std::vector<std::string> table_rows(const std::string& md) {
  std::vector<std::string> rows;
  std::istringstream in(md);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("| ", 0) == 0) rows.push_back(line);
  }
  return rows;
}

TEST(EmitReport, EmptyIsHeaderOnly) {
  const auto rows = table_rows(emit_report({}, ReportFormat::kMarkdown));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], "| Model | CFs | CPs | Ratio | Avg | Fallbacks | Raw CFs |");
  EXPECT_EQ(emit_report({}, ReportFormat::kCsv).find('\n'), emit_report({}, ReportFormat::kCsv).size() - 1);
}

TEST(EmitReport, OneRowFormatting) {
  const auto rows = table_rows(emit_report({sample_report(ModelFamily::kLinearSvm, 472, 68, 60)}, ReportFormat::kMarkdown));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], "| SVM | 472 | 68 | 14.41% | 7.87 | 0 | 475 |");
}

TEST(EmitReport, RowsKeepInputOrderAndAreDeterministic) {
  std::vector<EvaluationReport> reps;
  for (auto f : kAllFamilies) reps.push_back(sample_report(f, 100, 10, 60));
  const std::string md = emit_report(reps, ReportFormat::kMarkdown);
  const auto rows = table_rows(md);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[1].substr(0, 6), "| SVM ");
  EXPECT_EQ(rows[2].substr(0, 5), "| RF ");
  EXPECT_EQ(rows[3].substr(0, 5), "| NN ");
  EXPECT_EQ(rows[4].substr(0, 6), "| KNN ");
  EXPECT_EQ(md, emit_report(reps, ReportFormat::kMarkdown));
  const std::string csv = emit_report(reps, ReportFormat::kCsv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(csv.find("iris,SVM,60,100,10,10.00,1.67,0,0,103,"), std::string::npos);
}

TEST(RunEvaluation, MajorityOnlyModelTakesFallbackEverywhere) {
  // 30 rows of class 0 and 10 of class 1; a KNN whose k covers the whole
  // training set always votes for the majority.
  Dataset ds = dataset_with(40, 2, 2, 8);
  for (std::size_t i = 0; i < 40; ++i) ds.labels[i] = i < 30 ? 0 : 1;
  PipelineConfig cfg;
  cfg.hyperparameters.knn_k = 100;
  const auto pipeline = Pipeline::build(ds, ModelFamily::kKnn, cfg);
  const auto run = run_evaluation_detailed(*pipeline);
  const auto& r = run.report;
  EXPECT_EQ(r.total_queries, pipeline->split().test_indices.size());
  EXPECT_EQ(r.cfs, 0u);
  EXPECT_EQ(r.cps, 0u);
  EXPECT_EQ(r.ratio, 0.0);
  EXPECT_EQ(r.avg, 0.0);
  EXPECT_EQ(r.fallback_count, r.total_queries);
  EXPECT_EQ(r.unresolved_count, r.total_queries);
}

TEST(RunEvaluation, IrisInvariantsAndDeterminism) {
  PipelineConfig cfg;
  const auto pipeline = Pipeline::build(testing::iris(), ModelFamily::kLinearSvm, cfg);
  const auto run = run_evaluation_detailed(*pipeline);
  const auto& r = run.report;
  EXPECT_EQ(r.total_queries, 60u);
  EXPECT_EQ(run.outcomes.size(), 60u);
  std::size_t cfs = 0, cps = 0, fallbacks = 0;
  for (const auto& o : run.outcomes) {
    if (!o.counterfactuals || o.counterfactuals->is_fallback) {
      ++fallbacks;
      continue;
    }
    cfs += o.counterfactuals->points.size();
    cps += o.common_points;
    EXPECT_LE(o.common_points, o.counterfactuals->points.size());
  }
  EXPECT_EQ(r.cfs, cfs);
  EXPECT_EQ(r.cps, cps);
  EXPECT_EQ(r.fallback_count, fallbacks);
  EXPECT_LE(r.cps, r.cfs);
  EXPECT_LE(r.cfs, r.raw_cfs);
  EXPECT_NEAR(r.ratio, 100.0 * r.cps / std::max<std::size_t>(r.cfs, 1), 1e-9);
  EXPECT_NEAR(r.avg * r.total_queries, static_cast<double>(r.cfs), 1e-9);
  const auto again = run_evaluation(testing::iris(), ModelFamily::kLinearSvm, cfg);
  EXPECT_EQ(emit_report({r}, ReportFormat::kCsv), emit_report({again}, ReportFormat::kCsv));
}

TEST(RunEvaluation, EvaluationRowsHonourConfig) {
  Split s{{0, 1, 2}, {3, 4, 5, 6}, 0, 0.5};
  PipelineConfig cfg;
  EXPECT_EQ(evaluation_rows(s, 7, cfg), (std::vector<std::size_t>{3, 4, 5, 6}));
  cfg.max_eval_points = 2;
  EXPECT_EQ(evaluation_rows(s, 7, cfg), (std::vector<std::size_t>{3, 4}));
  cfg.evaluate_all_rows = true;
  cfg.max_eval_points = 0;
  EXPECT_EQ(evaluation_rows(s, 7, cfg).size(), 7u);
}

TEST(PipelineConfig, FingerprintTracksEverySetting) {
  PipelineConfig a;
  PipelineConfig b;
  EXPECT_EQ(a.fingerprint("iris", ModelFamily::kKnn), b.fingerprint("iris", ModelFamily::kKnn));
  EXPECT_NE(a.fingerprint("iris", ModelFamily::kKnn), a.fingerprint("iris", ModelFamily::kRandomForest));
  EXPECT_NE(a.fingerprint("iris", ModelFamily::kKnn), a.fingerprint("wine", ModelFamily::kKnn));
  b.shapley.n_permutations = 10;
  EXPECT_NE(a.fingerprint("iris", ModelFamily::kKnn), b.fingerprint("iris", ModelFamily::kKnn));
  b = a;
  b.hyperparameters.svm_lambda = 0.5;
  EXPECT_NE(a.fingerprint("iris", ModelFamily::kKnn), b.fingerprint("iris", ModelFamily::kKnn));
}

}  // namespace
}  // namespace cfshap

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

#ifndef CFSHAP_EVALUATION_HPP_
#define CFSHAP_EVALUATION_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cfshap/pipeline.hpp"

namespace cfshap {

// Aggregate counterfactual statistics for one (dataset, model) pair.
struct EvaluationReport {
  std::string dataset;
  ModelFamily model = ModelFamily::kLinearSvm;
  std::size_t total_queries = 0;
  std::size_t cfs = 0;             // deduplicated counterfactual points
  std::size_t cps = 0;             // of which coincide with a dataset row
  double ratio = 0.0;              // 100 * cps / max(cfs, 1)
  double avg = 0.0;                // cfs / total_queries
  std::size_t fallback_count = 0;  // queries answered by the fallback path
  std::size_t unresolved_count = 0;  // fallback queries with no candidate
  std::size_t raw_cfs = 0;         // accepted mutants before deduplication
  std::string config_fingerprint;
};

struct QueryOutcome {
  ContrastiveQuery query;
  std::size_t point_index = 0;  // dataset row of the query point
  // Empty when the query was unresolved.
  std::optional<CounterfactualSet> counterfactuals;
  std::size_t common_points = 0;
};

struct EvaluationRun {
  EvaluationReport report;
  std::vector<QueryOutcome> outcomes;
};

// Row indices evaluated under `config`: the test split (or all rows),
// truncated to max_eval_points.
std::vector<std::size_t> evaluation_rows(const Split& split, std::size_t num_rows, const PipelineConfig& config);

// One query per class other than the prediction, for each evaluation row of
// the standardized dataset.
std::vector<ContrastiveQuery> enumerate_queries(const Dataset& ds, std::span<const std::size_t> rows,
                                                const Classifier& model);

inline constexpr double kCommonPointTolerance = 1e-9;

// Number of points that match some dataset row within the tolerance in
// every coordinate.
std::size_t count_common(const std::vector<FeatureVector>& points, const Dataset& ds,
                         double tolerance = kCommonPointTolerance);

EvaluationRun run_evaluation_detailed(const Pipeline& pipeline);
EvaluationReport run_evaluation(const Dataset& raw, ModelFamily family, const PipelineConfig& config);

enum class ReportFormat { kMarkdown, kCsv };

std::string emit_report(const std::vector<EvaluationReport>& reports, ReportFormat format);

}  // namespace cfshap

#endif  // CFSHAP_EVALUATION_HPP_

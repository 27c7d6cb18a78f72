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

#include "cfshap/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "cfshap/error.hpp"

namespace cfshap {

std::vector<std::size_t> evaluation_rows(const Split& split, std::size_t num_rows, const PipelineConfig& config) {
  std::vector<std::size_t> rows;
  if (config.evaluate_all_rows) {
    rows.resize(num_rows);
    std::iota(rows.begin(), rows.end(), 0);
  } else {
    rows = split.test_indices;
  }
  if (config.max_eval_points > 0 && rows.size() > config.max_eval_points) rows.resize(config.max_eval_points);
  return rows;
}

std::vector<ContrastiveQuery> enumerate_queries(const Dataset& ds, std::span<const std::size_t> rows,
                                                const Classifier& model) {
  std::vector<ContrastiveQuery> queries;
  for (std::size_t r : rows) {
    FeatureVector point = ds.points.row_vector(r);
    const ClassId p = model.predict(point);
    for (std::size_t q = 0; q < model.class_count(); ++q) {
      if (static_cast<ClassId>(q) == p) continue;
      queries.push_back({point, p, static_cast<ClassId>(q)});
    }
  }
  return queries;
}

std::size_t count_common(const std::vector<FeatureVector>& points, const Dataset& ds, double tolerance) {
  if (points.empty() || ds.num_rows() == 0) return 0;
  const std::size_t d = ds.points.cols();
  // Rows ordered by their first coordinate bound the candidates per point.
  std::vector<std::size_t> order(ds.num_rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ds.points(a, 0) < ds.points(b, 0); });
  std::size_t count = 0;
  for (const auto& p : points) {
    if (p.size() != d) throw Error(ErrorCode::kInvalidArgument, "dimension mismatch", "count_common");
    auto lo = std::lower_bound(order.begin(), order.end(), p[0] - tolerance,
                               [&](std::size_t r, double v) { return ds.points(r, 0) < v; });
    bool found = false;
    for (auto it = lo; it != order.end() && ds.points(*it, 0) <= p[0] + tolerance; ++it) {
      const auto row = ds.points.row(*it);
      bool match = true;
      for (std::size_t j = 0; j < d && match; ++j) match = std::abs(row[j] - p[j]) <= tolerance;
      if (match) {
        found = true;
        break;
      }
    }
    if (found) ++count;
  }
  return count;
}

EvaluationRun run_evaluation_detailed(const Pipeline& pipeline) {
  const Dataset& ds = pipeline.standardized();
  const auto rows = evaluation_rows(pipeline.split(), ds.num_rows(), pipeline.config());
  const Model& model = pipeline.model();

  EvaluationRun run;
  EvaluationReport& rep = run.report;
  rep.dataset = ds.name;
  rep.model = pipeline.family();
  rep.config_fingerprint = pipeline.config_fingerprint();

  for (std::size_t r : rows) {
    const FeatureVector point = ds.points.row_vector(r);
    const ClassId predicted = model.predict(point);
    // Attributions do not depend on the desired class; compute them once.
    ShapleyMatrix sv;
    try {
      sv = explain_point(pipeline.value_function(), point, pipeline.config().shapley);
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), "row " + std::to_string(r) + ": " + e.detail());
    }
    for (std::size_t q = 0; q < model.class_count(); ++q) {
      const auto desired = static_cast<ClassId>(q);
      if (desired == predicted) continue;
      QueryOutcome outcome;
      outcome.query = {point, predicted, desired};
      outcome.point_index = r;
      try {
        outcome.counterfactuals = find_counterfactuals(model, point, desired, sv, pipeline.neighbors());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoCounterfactual) {
          throw Error(e.code(), e.what(),
                      "row " + std::to_string(r) + ", desired " + std::to_string(desired) + ": " + e.detail());
        }
      }
      ++rep.total_queries;
      if (!outcome.counterfactuals) {
        ++rep.fallback_count;
        ++rep.unresolved_count;
      } else if (outcome.counterfactuals->is_fallback) {
        ++rep.fallback_count;
      } else {
        const auto& cf = *outcome.counterfactuals;
        outcome.common_points = count_common(cf.points, ds);
        rep.cfs += cf.points.size();
        rep.raw_cfs += cf.raw_count;
        rep.cps += outcome.common_points;
      }
      run.outcomes.push_back(std::move(outcome));
    }
  }
  rep.ratio = 100.0 * static_cast<double>(rep.cps) / static_cast<double>(std::max<std::size_t>(rep.cfs, 1));
  rep.avg = rep.total_queries > 0 ? static_cast<double>(rep.cfs) / static_cast<double>(rep.total_queries) : 0.0;
  return run;
}

EvaluationReport run_evaluation(const Dataset& raw, ModelFamily family, const PipelineConfig& config) {
  const auto pipeline = Pipeline::build(raw, family, config);
  return run_evaluation_detailed(*pipeline).report;
}

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string emit_report(const std::vector<EvaluationReport>& reports, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << "dataset,model,total_queries,cfs,cps,ratio,avg,fallback_count,unresolved_count,raw_cfs,"
           "config_fingerprint\n";
    for (const auto& r : reports) {
      out << r.dataset << ',' << upper(family_name(r.model)) << ',' << r.total_queries << ',' << r.cfs << ','
          << r.cps << ',' << fixed2(r.ratio) << ',' << fixed2(r.avg) << ',' << r.fallback_count << ','
          << r.unresolved_count << ',' << r.raw_cfs << ',' << r.config_fingerprint << '\n';
    }
    return out.str();
  }

  std::vector<std::string> datasets;
  for (const auto& r : reports) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
  }
  out << "# Counterfactual evaluation";
  if (!datasets.empty()) {
    out << ": ";
    for (std::size_t i = 0; i < datasets.size(); ++i) out << (i ? ", " : "") << datasets[i];
  }
  out << "\n\n"
      << "- CFs: distinct counterfactual points over all queries (duplicate mutants counted once; "
         "Raw CFs counts them all).\n"
      << "- CPs: counterfactual points equal to a dataset row (tolerance 1e-9, standardized units).\n"
      << "- Ratio: 100 * CPs / CFs. Avg: CFs per query (one query per point and non-predicted class).\n"
      << "- Fallbacks: queries answered with the nearest training point of the desired class; "
         "not counted in CFs/CPs.\n";
  for (const auto& r : reports) {
    out << "- " << r.dataset << '/' << upper(family_name(r.model)) << ": " << r.total_queries
        << " queries, config " << r.config_fingerprint.substr(0, 16) << '\n';
  }
  out << "\n| Model | CFs | CPs | Ratio | Avg | Fallbacks | Raw CFs |\n"
      << "|-------|-----|-----|-------|-----|-----------|---------|\n";
  for (const auto& r : reports) {
    out << "| " << upper(family_name(r.model)) << " | " << r.cfs << " | " << r.cps << " | " << fixed2(r.ratio)
        << "% | " << fixed2(r.avg) << " | " << r.fallback_count << " | " << r.raw_cfs << " |\n";
  }
  return out.str();
}

}  // namespace cfshap

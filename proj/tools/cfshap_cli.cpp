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

// cfshap: evaluation harness, one-off explanations and the HTTP service.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfshap/dataset.hpp"
#include "cfshap/error.hpp"
#include "cfshap/evaluation.hpp"
#include "cfshap/pipeline.hpp"
#include "cfshap/service.hpp"
#include "httplib.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitPipeline = 2;

struct CommonOptions {
  std::string dataset;
  std::string data_dir = cfshap::default_data_dir().string();
  std::string label_column;
  std::string model = "svm";
  std::uint64_t seed = cfshap::kDefaultSeed;
  double split = cfshap::kDefaultSplitRatio;
  std::string shap = "auto";
  std::size_t permutations = 2000;
  std::size_t background = 100;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool multi_model) {
  cmd->add_option("--dataset", o.dataset, "Registered dataset name or path to a CSV file")->required();
  cmd->add_option("--data-dir", o.data_dir, "Directory holding <name>.manifest.json files");
  cmd->add_option("--label-column", o.label_column, "Label column for CSV paths (default: last column)");
  cmd->add_option("--model", o.model,
                  multi_model ? "knn|rf|nn|svm, a comma list, or all" : "knn|rf|nn|svm");
  cmd->add_option("--seed", o.seed, "Seed for the split, training and sampling");
  cmd->add_option("--split", o.split, "Training fraction")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--shap", o.shap, "Attribution mode")->check(CLI::IsMember({"auto", "exact", "sampled"}));
  cmd->add_option("--permutations", o.permutations, "Permutations for sampled attributions")->check(CLI::PositiveNumber);
  cmd->add_option("--background", o.background, "Background rows (0 = whole training split)");
}

cfshap::Dataset load_dataset(const CommonOptions& o) {
  const std::filesystem::path path(o.dataset);
  if (path.extension() == ".csv" || std::filesystem::is_regular_file(path)) {
    cfshap::LabelColumn label;
    if (o.label_column.empty()) {
      std::ifstream in(path);
      std::string header;
      if (!in || !std::getline(in, header)) throw cfshap::Error(cfshap::ErrorCode::kNotFound, "missing file", path.string());
      label = static_cast<std::size_t>(std::count(header.begin(), header.end(), ','));
    } else {
      label = o.label_column;
    }
    return cfshap::load_csv(path, label);
  }
  return cfshap::load_registered(o.data_dir, o.dataset);
}

cfshap::PipelineConfig pipeline_config(const CommonOptions& o) {
  cfshap::PipelineConfig cfg;
  cfg.seed = o.seed;
  cfg.split_ratio = o.split;
  cfg.shapley.seed = o.seed;
  cfg.shapley.n_permutations = o.permutations;
  cfg.shapley.background_size = o.background;
  if (o.shap == "exact") cfg.shapley.mode = cfshap::ShapleyConfig::Mode::kExact;
  if (o.shap == "sampled") cfg.shapley.mode = cfshap::ShapleyConfig::Mode::kSampled;
  return cfg;
}

std::vector<cfshap::ModelFamily> parse_models(const std::string& spec) {
  std::vector<cfshap::ModelFamily> out;
  if (spec == "all") return {std::begin(cfshap::kAllFamilies), std::end(cfshap::kAllFamilies)};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(cfshap::parse_family(item));
  if (out.empty()) throw cfshap::Error(cfshap::ErrorCode::kInvalidArgument, "no model given");
  return out;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw cfshap::Error(cfshap::ErrorCode::kInvalidArgument, "malformed --point value", item);
    }
  }
  return out;
}

std::string format_row(std::span<const double> v, const std::vector<bool>& highlight = {}) {
  std::ostringstream out;
  out << '[';
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) out << ", ";
    const bool mark = !highlight.empty() && highlight[j];
    out << (mark ? "*" : "") << v[j] << (mark ? "*" : "");
  }
  out << ']';
  return out.str();
}

int run_evaluate(const CommonOptions& o, const std::string& out_path, std::size_t max_points, bool all_rows) {
  const auto ds = load_dataset(o);
  auto cfg = pipeline_config(o);
  cfg.max_eval_points = max_points;
  cfg.evaluate_all_rows = all_rows;
  std::vector<cfshap::EvaluationReport> reports;
  for (auto family : parse_models(o.model)) {
    std::cerr << "evaluating " << ds.name << " / " << cfshap::family_name(family) << "...\n";
    reports.push_back(cfshap::run_evaluation(ds, family, cfg));
  }
  const bool csv = std::filesystem::path(out_path).extension() == ".csv";
  const std::string text =
      cfshap::emit_report(reports, csv ? cfshap::ReportFormat::kCsv : cfshap::ReportFormat::kMarkdown);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw cfshap::Error(cfshap::ErrorCode::kInvalidArgument, "cannot write report", out_path);
    out << text;
  }
  return 0;
}

int run_explain(const CommonOptions& o, const std::string& point_text, const std::string& desired_text) {
  const auto ds = load_dataset(o);
  const auto family = cfshap::parse_family(o.model);
  const auto pipeline = cfshap::Pipeline::build(ds, family, pipeline_config(o));
  const auto raw_point = parse_point(point_text);
  if (raw_point.size() != ds.num_features()) {
    throw cfshap::Error(cfshap::ErrorCode::kInvalidArgument, "dimension mismatch",
                        "--point has " + std::to_string(raw_point.size()) + " values, dataset has " +
                            std::to_string(ds.num_features()) + " features");
  }
  cfshap::ClassId desired = -1;
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    if (ds.class_names[c] == desired_text) desired = static_cast<cfshap::ClassId>(c);
  }
  if (desired < 0) {
    try {
      desired = std::stoi(desired_text);
    } catch (const std::exception&) {
      throw cfshap::Error(cfshap::ErrorCode::kInvalidArgument, "unknown desired class", desired_text);
    }
  }

  const auto point = pipeline->scaler().apply(raw_point);
  const auto predicted = pipeline->model().predict(point);
  std::cout << "Original datapoint: " << format_row(raw_point) << '\n'
            << "Predicted class: " << predicted << " (" << ds.class_names[static_cast<std::size_t>(predicted)] << ")\n"
            << "Query: Why " << predicted << " not " << desired << "?\n\n";
  const auto answer = pipeline->explain(point, desired);
  std::cout << "Why " << predicted << "? " << answer.explanation.nl_why_p << '\n'
            << "Why not " << desired << "? " << answer.explanation.nl_not_q << "\n\n";
  if (!answer.counterfactuals) {
    std::cout << "No counterfactual found and no training point is predicted as class " << desired << ".\n";
    return 0;
  }
  const auto& cf = *answer.counterfactuals;
  const auto& scaler = pipeline->scaler();
  if (cf.is_fallback) {
    std::cout << "No mutant reached class " << desired << "; nearest training point of that class:\n  "
              << format_row(scaler.invert(*cf.fallback_point)) << '\n';
    return 0;
  }
  std::cout << "Counterfactual points (" << cf.points.size() << ", neighbor budget " << cf.neighbor_budget_used
            << ", mutated features marked *):\n";
  for (const auto& p : cf.points) {
    std::cout << "  " << format_row(scaler.invert(p), cf.mutate_mask) << '\n';
  }
  return 0;
}

std::atomic<httplib::Server*> g_server{nullptr};

int run_serve(const std::string& data_dir, int port, const std::string& static_dir, const std::string& host) {
  cfshap::ServiceConfig cfg;
  cfg.data_dir = data_dir;
  if (!static_dir.empty()) cfg.static_dir = static_dir;
  cfshap::ExplanationService service(cfg);
  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!server.listen(host, port)) {
    throw cfshap::Error(cfshap::ErrorCode::kUnavailable, "cannot listen", host + ":" + std::to_string(port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive and counterfactual explanations from Shapley attributions"};
  app.require_subcommand(1);

  CommonOptions eval_opts;
  std::string out_path;
  std::size_t max_points = 0;
  bool all_rows = false;
  auto* evaluate = app.add_subcommand("evaluate", "Run the counterfactual evaluation and write a report");
  add_common(evaluate, eval_opts, true);
  evaluate->add_option("--out", out_path, "Report path (.md or .csv); stdout when omitted");
  evaluate->add_option("--max-points", max_points, "Evaluate at most this many points (0 = all)");
  evaluate->add_flag("--all-rows", all_rows, "Evaluate every row instead of the test split");

  CommonOptions explain_opts;
  std::string point_text;
  std::string desired_text;
  auto* explain = app.add_subcommand("explain", "Answer one 'Why P not Q?' query");
  add_common(explain, explain_opts, false);
  explain->add_option("--point", point_text, "Comma-separated feature values in raw units")->required();
  explain->add_option("--desired", desired_text, "Desired class id or name")->required();

  std::string serve_dir = cfshap::default_data_dir().string();
  std::string static_dir;
  std::string host = "0.0.0.0";
  int port = 8080;
  if (const char* env = std::getenv("CFSHAP_PORT"); env && *env) port = std::atoi(env);
  auto* serve = app.add_subcommand("serve", "Run the HTTP explanation service");
  serve->add_option("--port", port, "Listen port (default: $CFSHAP_PORT or 8080)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--data-dir", serve_dir, "Directory holding <name>.manifest.json files");
  serve->add_option("--static-dir", static_dir, "Built dashboard assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (evaluate->parsed()) return run_evaluate(eval_opts, out_path, max_points, all_rows);
    if (explain->parsed()) return run_explain(explain_opts, point_text, desired_text);
    if (serve->parsed()) return run_serve(serve_dir, port, static_dir, host);
  } catch (const cfshap::Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ')';
    std::cerr << '\n';
    const bool usage = e.code() == cfshap::ErrorCode::kInvalidArgument ||
                       e.code() == cfshap::ErrorCode::kNotFound || e.code() == cfshap::ErrorCode::kNotContrastive;
    return usage ? kExitUsage : kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitUsage;
}

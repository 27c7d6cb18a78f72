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


// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// when any selected criterion fails.
//
//   cfshap_acceptance [--only NAME] [--cli PATH] [--list]

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cfshap/classifier.hpp"
#include "cfshap/dataset.hpp"
#include "cfshap/evaluation.hpp"
#include "cfshap/pipeline.hpp"
#include "cfshap/random.hpp"
#include "cfshap/service.hpp"
#include "cfshap/shapley.hpp"
#include "httplib.h"
#include "json.hpp"

namespace {

using namespace cfshap;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::string title;
  std::function<Outcome()> run;
};

std::string g_cli_path;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const Dataset& dataset(const std::string& name) {
  static std::map<std::string, Dataset> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, load_registered(default_data_dir(), name)).first;
  return it->second;
}

double efficiency_gap(const ShapleyMatrix& sv) {
  double worst = 0.0;
  for (std::size_t c = 0; c < sv.class_count(); ++c) {
    double total = sv.base_values[c];
    for (double v : sv.for_class(static_cast<ClassId>(c))) total += v;
    worst = std::max(worst, std::abs(total - sv.output[c]));
  }
  return worst;
}

// 50 IRIS points (the test split holds 30, so the draw covers all rows)
// times 3 classes, exact mode, every model family.
Outcome shapley_efficiency() {
  Outcome o;
  const Dataset& iris = dataset("iris");
  Rng rng(mix_seed(kDefaultSeed, 50));
  std::vector<std::size_t> rows(iris.num_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  shuffle(std::span<std::size_t>(rows), rng);
  rows.resize(50);
  double worst = 0.0;
  double elapsed = 0.0;
  for (auto family : kAllFamilies) {
    const auto p = Pipeline::build(iris, family, PipelineConfig{});
    const auto t0 = Clock::now();
    for (auto r : rows) worst = std::max(worst, efficiency_gap(shapley_exact(p->value_function(), p->standardized().points.row(r))));
    elapsed += seconds_since(t0);
  }
  o.pass = worst <= 1e-9 && elapsed < 60.0;
  o.detail = "max |base+sum(phi)-f| = " + fmt("%.3g", worst) + " over 50 points x 3 classes x 4 models, " +
             fmt("%.2f", elapsed) + " s";
  return o;
}

// Sampled (n = 5000) against exact on 20 test points each of IRIS and Wine.
Outcome sampling_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::ostringstream detail;
  for (const char* name : {"iris", "wine"}) {
    for (auto family : kAllFamilies) {
      const auto p = Pipeline::build(dataset(name), family, PipelineConfig{});
      const auto& test = p->split().test_indices;
      double worst = 0.0;
      for (std::size_t k = 0; k < 20; ++k) {
        const auto point = p->standardized().points.row(test[k]);
        const auto exact = shapley_exact(p->value_function(), point);
        const auto approx = shapley_sampled(p->value_function(), point, 5000, kDefaultSeed);
        for (std::size_t i = 0; i < exact.phi.data().size(); ++i) {
          worst = std::max(worst, std::abs(exact.phi.data()[i] - approx.phi.data()[i]));
        }
      }
      if (worst > 0.01) o.pass = false;
      detail << name << '/' << family_name(family) << ' ' << fmt("%.4f", worst) << "; ";
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 600.0) o.pass = false;
  o.detail = "max |sampled-exact| per entry on 20 points (B=100): " + detail.str() + fmt("%.1f", elapsed) + " s";
  return o;
}

// Dummy: a background column pinned to the point's value. Symmetry: the
// trained IRIS network fed the mean of two duplicated columns.
Outcome axioms() {
  Outcome o;
  const auto p = Pipeline::build(dataset("iris"), ModelFamily::kNeuralNet, PipelineConfig{});
  const Model& nn = p->model();
  const auto& test = p->split().test_indices;
  double dummy_worst = 0.0;
  double sym_worst = 0.0;

  class Symmetric final : public Classifier {
   public:
    explicit Symmetric(const Classifier& inner) : inner_(inner) {}
    std::size_t class_count() const override { return inner_.class_count(); }
    std::size_t feature_count() const override { return 5; }
    void predict_proba_into(std::span<const double> x, std::span<double> out) const override {
      const double z[] = {x[0], x[1], 0.5 * (x[2] + x[3]), x[4]};
      inner_.predict_proba_into(z, out);
    }

   private:
    const Classifier& inner_;
  } sym(nn);

  for (std::size_t k = 0; k < 10; ++k) {
    const auto point = p->standardized().points.row_vector(test[k]);
    for (std::size_t j = 0; j < 4; ++j) {
      ValueFunctionSpec spec = p->value_function();
      for (std::size_t b = 0; b < spec.background.rows(); ++b) spec.background(b, j) = point[j];
      const auto sv = shapley_exact(spec, point);
      for (std::size_t c = 0; c < sv.class_count(); ++c) dummy_worst = std::max(dummy_worst, std::abs(sv.phi(c, j)));
    }
    // Duplicate petal length into columns 2 and 3.
    const auto& bg = p->value_function().background;
    Matrix bg5(bg.rows(), 5);
    for (std::size_t b = 0; b < bg.rows(); ++b) {
      const double row[] = {bg(b, 0), bg(b, 1), bg(b, 2), bg(b, 2), bg(b, 3)};
      std::copy(std::begin(row), std::end(row), bg5.row(b).begin());
    }
    const std::vector<double> x5{point[0], point[1], point[2], point[2], point[3]};
    const auto sv = shapley_exact(ValueFunctionSpec{&sym, bg5}, x5);
    for (std::size_t c = 0; c < sv.class_count(); ++c) sym_worst = std::max(sym_worst, std::abs(sv.phi(c, 2) - sv.phi(c, 3)));
  }
  o.pass = dummy_worst <= 1e-9 && sym_worst <= 1e-9;
  o.detail = "max |phi_dummy| = " + fmt("%.3g", dummy_worst) + ", max |phi_i - phi_j| for twins = " + fmt("%.3g", sym_worst);
  return o;
}

// Every counterfactual from a full IRIS run classifies as Q and keeps the
// unmasked coordinates bit-identical.
Outcome counterfactual_validity() {
  Outcome o;
  std::size_t total = 0, invalid = 0, moved = 0;
  for (auto family : kAllFamilies) {
    const auto p = Pipeline::build(dataset("iris"), family, PipelineConfig{});
    const auto run = run_evaluation_detailed(*p);
    for (const auto& q : run.outcomes) {
      if (!q.counterfactuals || q.counterfactuals->is_fallback) continue;
      const auto& cf = *q.counterfactuals;
      for (const auto& pt : cf.points) {
        ++total;
        if (p->model().predict(pt) != q.query.desired) ++invalid;
        for (std::size_t j = 0; j < pt.size(); ++j) {
          if (!cf.mutate_mask[j] && std::memcmp(&pt[j], &q.query.point[j], sizeof(double)) != 0) {
            ++moved;
            break;
          }
        }
      }
    }
  }
  o.pass = total > 0 && invalid == 0 && moved == 0;
  o.detail = std::to_string(total) + " counterfactuals, " + std::to_string(invalid) + " not classified as Q, " +
             std::to_string(moved) + " touching unmasked features";
  return o;
}

std::vector<EvaluationReport> iris_reports(double* elapsed) {
  static std::vector<EvaluationReport> reports;
  static double secs = 0.0;
  if (reports.empty()) {
    const auto t0 = Clock::now();
    for (auto family : kAllFamilies) reports.push_back(run_evaluation(dataset("iris"), family, PipelineConfig{}));
    secs = seconds_since(t0);
  }
  if (elapsed) *elapsed = secs;
  return reports;
}

Outcome iris_magnitude() {
  Outcome o;
  double elapsed = 0.0;
  std::ostringstream detail;
  for (const auto& r : iris_reports(&elapsed)) {
    const bool avg_ok = r.avg >= 3.0 && r.avg <= 15.0;
    const bool ratio_ok = r.ratio >= 5.0 && r.ratio <= 50.0;
    if (!avg_ok || !ratio_ok) o.pass = false;
    detail << family_name(r.model) << " avg " << fmt("%.2f", r.avg) << (avg_ok ? "" : "(out)") << " ratio "
           << fmt("%.2f", r.ratio) << '%' << (ratio_ok ? "" : "(out)") << "; ";
  }
  if (elapsed >= 900.0) o.pass = false;
  o.detail = detail.str() + "wanted avg in [3,15], ratio in [5%,50%]; " + fmt("%.1f", elapsed) + " s";
  return o;
}

Outcome density_ordering() {
  Outcome o;
  double iris_sum = 0.0;
  for (const auto& r : iris_reports(nullptr)) iris_sum += r.ratio;
  PipelineConfig cfg;
  cfg.shapley.mode = ShapleyConfig::Mode::kSampled;
  cfg.shapley.n_permutations = 2000;
  cfg.max_eval_points = 50;
  const auto t0 = Clock::now();
  double mobile_sum = 0.0;
  std::ostringstream detail;
  for (auto family : kAllFamilies) {
    const auto r = run_evaluation(dataset("mobile"), family, cfg);
    mobile_sum += r.ratio;
    detail << family_name(r.model) << ' ' << fmt("%.2f", r.ratio) << "% avg " << fmt("%.2f", r.avg) << "; ";
  }
  const double elapsed = seconds_since(t0);
  const double iris_mean = iris_sum / 4.0;
  const double mobile_mean = mobile_sum / 4.0;
  o.pass = mobile_mean <= iris_mean && elapsed < 45.0 * 60.0;
  o.detail = "mobile mean ratio " + fmt("%.2f", mobile_mean) + "% vs iris " + fmt("%.2f", iris_mean) + "% (" +
             detail.str() + fmt("%.1f", elapsed) + " s)";
  return o;
}

Outcome worked_example() {
  Outcome o;
  std::ostringstream detail;
  const std::vector<double> raw{4.4, 2.9, 1.4, 0.2};
  const std::string pro = "Algorithms Pro classification was primarily influenced by ";
  const std::string anti = "Algorithms Anti classification was primarily influenced by ";
  for (auto family : kAllFamilies) {
    const auto p = Pipeline::build(dataset("iris"), family, PipelineConfig{});
    const auto point = p->scaler().apply(raw);
    const ClassId predicted = p->model().predict(point);
    bool ok = predicted == 0;
    std::size_t count = 0;
    if (ok) {
      const auto answer = p->explain(point, 1);
      const auto& ex = answer.explanation;
      const auto names = p->raw().feature_names();
      const auto sv_p = ex.shapley.for_class(0);
      const auto sv_q = ex.shapley.for_class(1);
      const auto head_p = std::max_element(sv_p.begin(), sv_p.end()) - sv_p.begin();
      const auto head_q = std::min_element(sv_q.begin(), sv_q.end()) - sv_q.begin();
      ok = ok && ex.nl_why_p.rfind(pro + names[head_p], 0) == 0 && ex.nl_not_q.rfind(anti + names[head_q], 0) == 0;
      ok = ok && answer.counterfactuals && !answer.counterfactuals->is_fallback &&
           !answer.counterfactuals->points.empty();
      if (ok) {
        for (const auto& cf : answer.counterfactuals->points) {
          count += 1;
          ok = ok && p->model().predict(cf) == 1;
          for (std::size_t j = 0; j < 4; ++j) {
            if (cf[j] != point[j] && !(sv_q[j] < 0.0)) ok = false;
          }
        }
      }
      detail << family_name(family) << ": \"" << ex.nl_why_p << "\" / \"" << ex.nl_not_q << "\", " << count
             << " counterfactuals; ";
    } else {
      detail << family_name(family) << ": predicted " << predicted << "; ";
    }
    if (!ok) o.pass = false;
  }
  o.detail = detail.str();
  return o;
}

int run_shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  Outcome o;
  if (g_cli_path.empty()) return {false, "no --cli path given"};
  const auto dir = std::filesystem::temp_directory_path() / ("cfshap_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::vector<std::string> reports;
  for (int i = 0; i < 2; ++i) {
    const auto out = dir / ("run" + std::to_string(i) + ".md");
    const int rc = run_shell("'" + g_cli_path + "' evaluate --dataset iris --model all --out '" + out.string() +
                             "' 2>/dev/null");
    if (rc != 0) o.pass = false;
    reports.push_back(slurp(out));
  }
  std::filesystem::remove_all(dir);
  o.pass = o.pass && !reports[0].empty() && reports[0] == reports[1];
  o.detail = std::to_string(reports[0].size()) + " bytes per report, " +
             (reports[0] == reports[1] ? "identical" : "different");
  return o;
}

// A captured /explain request replayed against the same server and against
// a fresh service instance.
Outcome service_purity() {
  Outcome o;
  using nlohmann::json;
  std::vector<std::string> bodies;
  std::string request;
  for (int instance = 0; instance < 2; ++instance) {
    ExplanationService svc(ServiceConfig{});
    httplib::Server server;
    svc.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    auto s = client.Post("/sessions", R"({"dataset":"iris","model":"rf","seed":42})", "application/json");
    if (s && s->status == 200) {
      const json session = json::parse(s->body);
      const std::string path = "/sessions/" + session["id"].get<std::string>() + "/explain";
      if (request.empty()) request = json{{"desired", (session["predicted"].get<int>() + 1) % 3}}.dump();
      for (int replay = 0; replay < 2; ++replay) {
        auto r = client.Post(path.c_str(), request, "application/json");
        bodies.push_back(r && r->status == 200 ? r->body : std::string());
      }
    }
    server.stop();
    t.join();
  }
  o.pass = bodies.size() == 4 && !bodies[0].empty();
  for (const auto& b : bodies) o.pass = o.pass && b == bodies[0];
  o.detail = std::to_string(bodies.size()) + " replies to " + request + ", " +
             (o.pass ? "byte-identical" : "differing or failed") + " (" + std::to_string(bodies.empty() ? 0 : bodies[0].size()) +
             " bytes)";
  return o;
}

std::vector<Criterion> criteria() {
  return {
      {"shapley_efficiency", "Shapley efficiency on 50 IRIS points (exact, 1e-9, < 60 s)", shapley_efficiency},
      {"sampling_oracle", "Sampled vs exact within 0.01 on IRIS and Wine (n = 5000, < 10 min)", sampling_oracle},
      {"axioms", "Dummy and symmetry axioms at 1e-9", axioms},
      {"counterfactual_validity", "Counterfactual validity and footprint over full IRIS runs", counterfactual_validity},
      {"iris_magnitude", "IRIS magnitudes: Avg in [3, 15], Ratio in [5%, 50%] per model", iris_magnitude},
      {"density_ordering", "Mobile mean Ratio <= IRIS mean Ratio (sampled, 50 points, < 45 min)", density_ordering},
      {"worked_example", "Worked example [4.4, 2.9, 1.4, 0.2], Why 0 not 1", worked_example},
      {"cli_determinism", "Two CLI evaluation runs give byte-identical reports", cli_determinism},
      {"service_purity", "Replayed /explain request gives a byte-identical body", service_purity},
  };
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else if (arg == "--cli" && i + 1 < argc) {
      g_cli_path = argv[++i];
    } else if (arg == "--list") {
      for (const auto& c : criteria()) std::cout << c.name << '\n';
      return 0;
    } else {
      std::cerr << "usage: cfshap_acceptance [--only NAME] [--cli PATH] [--list]\n";
      return 2;
    }
  }
  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && c.name != only) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.name << "  " << c.title << "  [" << o.detail << "]"
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion: " << only << '\n';
    return 2;
  }
  return failed == 0 ? 0 : 1;
}

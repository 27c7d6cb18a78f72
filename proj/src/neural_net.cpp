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

#include <cmath>
#include <deque>
#include <numeric>

#include "cfshap/error.hpp"
#include "cfshap/models.hpp"
#include "cfshap/random.hpp"

namespace cfshap {
namespace {

struct Layout {
  std::size_t d, h, c;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return h * d; }
  std::size_t w2() const { return h * d + h; }
  std::size_t b2() const { return h * d + h + c * h; }
  std::size_t size() const { return h * d + h + c * h + c; }
};

void forward(const Layout& L, std::span<const double> p, std::span<const double> x,
             std::span<double> hidden, std::span<double> out) {
  for (std::size_t k = 0; k < L.h; ++k) {
    double a = p[L.b1() + k];
    const double* w = p.data() + L.w1() + k * L.d;
    for (std::size_t j = 0; j < L.d; ++j) a += w[j] * x[j];
    hidden[k] = std::tanh(a);
  }
  for (std::size_t c = 0; c < L.c; ++c) {
    double a = p[L.b2() + c];
    const double* w = p.data() + L.w2() + c * L.h;
    for (std::size_t k = 0; k < L.h; ++k) a += w[k] * hidden[k];
    out[c] = a;
  }
  softmax_inplace(out);
}

// Mean cross-entropy plus (l2 / 2n) * |W|^2, with its gradient.
double loss_and_gradient(const Layout& L, std::span<const double> p, const Matrix& x,
                         std::span<const ClassId> y, double l2, std::vector<double>& grad) {
  grad.assign(p.size(), 0.0);
  const double n = static_cast<double>(x.rows());
  std::vector<double> hidden(L.h);
  std::vector<double> out(L.c);
  std::vector<double> delta_h(L.h);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    forward(L, p, xi, hidden, out);
    const auto yi = static_cast<std::size_t>(y[i]);
    loss -= std::log(std::max(out[yi], 1e-300));
    out[yi] -= 1.0;  // dL/dlogits
    std::fill(delta_h.begin(), delta_h.end(), 0.0);
    for (std::size_t c = 0; c < L.c; ++c) {
      const double g = out[c];
      grad[L.b2() + c] += g;
      double* gw = grad.data() + L.w2() + c * L.h;
      const double* w = p.data() + L.w2() + c * L.h;
      for (std::size_t k = 0; k < L.h; ++k) {
        gw[k] += g * hidden[k];
        delta_h[k] += g * w[k];
      }
    }
    for (std::size_t k = 0; k < L.h; ++k) {
      const double g = delta_h[k] * (1.0 - hidden[k] * hidden[k]);
      grad[L.b1() + k] += g;
      double* gw = grad.data() + L.w1() + k * L.d;
      for (std::size_t j = 0; j < L.d; ++j) gw[j] += g * xi[j];
    }
  }
  loss /= n;
  for (double& g : grad) g /= n;
  double reg = 0.0;
  auto penalize = [&](std::size_t begin, std::size_t count) {
    for (std::size_t q = begin; q < begin + count; ++q) {
      reg += p[q] * p[q];
      grad[q] += l2 * p[q] / n;
    }
  };
  penalize(L.w1(), L.h * L.d);
  penalize(L.w2(), L.c * L.h);
  return loss + 0.5 * l2 * reg / n;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

NeuralNetModel::NeuralNetModel(Hyperparameters hp, std::size_t classes, std::size_t features,
                               std::vector<double> params, std::string fingerprint)
    : Model(ModelFamily::kNeuralNet, hp, classes, features, std::move(fingerprint)),
      params_(std::move(params)) {
  if (params_.size() != Layout{features, hp.nn_hidden, classes}.size()) {
    throw Error(ErrorCode::kInvalidArgument, "parameter vector has wrong size");
  }
}

std::unique_ptr<NeuralNetModel> NeuralNetModel::train(const Hyperparameters& hp, const Matrix& x,
                                                      std::span<const ClassId> y, std::size_t classes,
                                                      std::uint64_t seed, std::string fingerprint) {
  const Layout L{x.cols(), hp.nn_hidden, classes};
  std::vector<double> p(L.size(), 0.0);
  Rng rng(seed);
  auto glorot = [&](std::size_t begin, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t q = begin; q < begin + count; ++q) p[q] = limit * (2.0 * uniform_unit(rng) - 1.0);
  };
  glorot(L.w1(), L.h * L.d, L.d, L.h);
  glorot(L.w2(), L.c * L.h, L.h, L.c);

  // Limited-memory BFGS with a backtracking Armijo line search.
  std::vector<double> g;
  double f = loss_and_gradient(L, p, x, y, hp.nn_l2, g);
  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(p.size());
  std::vector<double> p_new(p.size());
  std::vector<double> g_new;
  std::vector<double> alpha(hp.nn_history);
  std::size_t iter = 0;
  for (; iter < hp.nn_max_iterations; ++iter) {
    // Two-loop recursion: dir = -H * g.
    for (std::size_t q = 0; q < p.size(); ++q) dir[q] = -g[q];
    for (std::size_t m = s_hist.size(); m-- > 0;) {
      alpha[m] = rho_hist[m] * dot(s_hist[m], dir);
      for (std::size_t q = 0; q < p.size(); ++q) dir[q] -= alpha[m] * y_hist[m][q];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t m = 0; m < s_hist.size(); ++m) {
      const double beta = rho_hist[m] * dot(y_hist[m], dir);
      for (std::size_t q = 0; q < p.size(); ++q) dir[q] += (alpha[m] - beta) * s_hist[m][q];
    }
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t q = 0; q < p.size(); ++q) dir[q] = -g[q];
      slope = dot(g, dir);
    }
    const double gnorm = std::sqrt(dot(g, g));
    if (gnorm < 1e-12) break;

    double step = s_hist.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
    double f_new = f;
    bool accepted = false;
    for (int tries = 0; tries < 50; ++tries) {
      for (std::size_t q = 0; q < p.size(); ++q) p_new[q] = p[q] + step * dir[q];
      f_new = loss_and_gradient(L, p_new, x, y, hp.nn_l2, g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(p.size());
    std::vector<double> yv(p.size());
    for (std::size_t q = 0; q < p.size(); ++q) {
      s[q] = p_new[q] - p[q];
      yv[q] = g_new[q] - g[q];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12) {
      if (s_hist.size() == hp.nn_history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
    }
    p.swap(p_new);
    g.swap(g_new);
    const double delta = f - f_new;
    f = f_new;
    if (std::abs(delta) < hp.nn_tolerance) {
      ++iter;
      break;
    }
  }

  auto model = std::make_unique<NeuralNetModel>(hp, classes, x.cols(), std::move(p), std::move(fingerprint));
  model->iterations_ = iter;
  model->final_loss_ = f;
  return model;
}

void NeuralNetModel::predict_proba_into(std::span<const double> x, std::span<double> out) const {
  const Layout L{feature_count(), hyperparameters().nn_hidden, class_count()};
  constexpr std::size_t kInline = 64;
  double buf[kInline];
  std::vector<double> heap;
  std::span<double> hidden(buf, std::min(L.h, kInline));
  if (L.h > kInline) {
    heap.resize(L.h);
    hidden = heap;
  }
  forward(L, params_, x, hidden, out);
}

}  // namespace cfshap

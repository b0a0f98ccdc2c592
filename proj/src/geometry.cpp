// Copyright 2026 The Readout Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "readout_lab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "readout_lab/errors.hpp"
#include "readout_lab/linalg.hpp"

namespace rlab {
namespace {

constexpr double kKktTol = 1e-8;
// Iterates past the required tolerance: a 1e-8 residual in weight space can
// still leave ~1e-7 error in the distance when the Gram matrix is stiff.
constexpr double kKktTarget = 1e-12;
constexpr std::size_t kMaxIters = 10000;
constexpr double kFlagTolerance = 1e-7;

// Vertices of the other prototypes stored as rows, plus the target point.
struct HullProblem {
  Matrix vertices;  // (C - 1) x d
  std::vector<double> target;

  std::vector<double> residual(std::span<const double> w) const {
    std::vector<double> r(target.size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = -target[j];
    for (std::size_t k = 0; k < vertices.rows(); ++k) {
      if (w[k] == 0.0) continue;
      auto v = vertices.row(k);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += w[k] * v[j];
    }
    return r;
  }

  double objective(std::span<const double> w) const {
    const double n = norm2(residual(w));
    return 0.5 * n * n;
  }

  std::vector<double> gradient(std::span<const double> w) const {
    const auto r = residual(w);
    std::vector<double> g(vertices.rows());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = dot(vertices.row(k), r);
    return g;
  }
};

std::vector<double> projected_step(const HullProblem& prob,
                                   std::span<const double> point,
                                   double inv_lipschitz) {
  const auto g = prob.gradient(point);
  std::vector<double> trial(point.begin(), point.end());
  for (std::size_t k = 0; k < trial.size(); ++k) trial[k] -= inv_lipschitz * g[k];
  return project_to_simplex(trial);
}

double kkt_residual(const HullProblem& prob, std::span<const double> w,
                    double inv_lipschitz) {
  const auto next = projected_step(prob, w, inv_lipschitz);
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += (w[k] - next[k]) * (w[k] - next[k]);
  return std::sqrt(s);
}

}  // namespace

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw ParameterError("project_to_simplex: empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> w(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) w[k] = std::max(v[k] - theta, 0.0);
  return w;
}

HullDistance hull_distance(const Matrix& prototypes, std::size_t c) {
  const std::size_t classes = prototypes.rows();
  if (classes < 2) throw ParameterError("hull_distance: need at least 2 prototypes");
  if (c >= classes) throw ParameterError("hull_distance: class index out of range");

  HullProblem prob;
  prob.vertices = Matrix(classes - 1, prototypes.cols());
  for (std::size_t k = 0, r = 0; k < classes; ++k) {
    if (k == c) continue;
    std::copy(prototypes.row(k).begin(), prototypes.row(k).end(),
              prob.vertices.row(r++).begin());
  }
  prob.target.assign(prototypes.row(c).begin(), prototypes.row(c).end());

  const std::size_t m = classes - 1;
  // Infinity norm of the Gram matrix bounds its largest eigenvalue.
  double lipschitz = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      row_sum += std::abs(dot(prob.vertices.row(i), prob.vertices.row(j)));
    lipschitz = std::max(lipschitz, row_sum);
  }

  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  std::size_t iter = 0;
  double residual = 0.0;
  if (lipschitz > 0.0) {
    const double step = 1.0 / lipschitz;
    std::vector<double> y = w;
    double t = 1.0;
    double f_w = prob.objective(w);
    residual = kkt_residual(prob, w, step);
    while (residual > kKktTarget && iter < kMaxIters) {
      ++iter;
      std::vector<double> next = projected_step(prob, y, step);
      const double f_next = prob.objective(next);
      if (f_next > f_w) {
        // Momentum overshot: restart from the last iterate.
        t = 1.0;
        y = w;
        next = projected_step(prob, w, step);
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      for (std::size_t k = 0; k < m; ++k) y[k] = next[k] + beta * (next[k] - w[k]);
      w = std::move(next);
      f_w = prob.objective(w);
      t = t_next;
      residual = kkt_residual(prob, w, step);
    }
    if (residual > kKktTol) {
      throw ConvergenceError("hull_distance: no convergence for class " +
                                 std::to_string(c),
                             residual);
    }
  }

  HullDistance out;
  out.distance = norm2(prob.residual(w));
  out.kkt_residual = residual;
  out.iterations = iter;
  out.weights.assign(classes, 0.0);
  for (std::size_t k = 0, r = 0; k < classes; ++k) {
    if (k == c) continue;
    out.weights[k] = w[r++];
  }
  return out;
}

double eps_inclusion_margin(const Matrix& prototypes, std::size_t c,
                            double radius, std::size_t trials,
                            std::uint64_t seed) {
  if (!(radius > 0.0)) throw ParameterError("eps_inclusion_margin: R must be positive");
  if (prototypes.rows() < 2 || c >= prototypes.rows()) {
    throw ParameterError("eps_inclusion_margin: bad class index or too few prototypes");
  }
  if (trials == 0) throw ParameterError("eps_inclusion_margin: trials must be positive");
  const std::size_t d = prototypes.cols();
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::vector<double> z(d);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& v : z) v = normal(rng);
    const double n = norm2(z);
    const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(d));
    for (double& v : z) v *= n > 0.0 ? r / n : 0.0;
    const double own = dot(z, prototypes.row(c));
    double rival = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < prototypes.rows(); ++k)
      if (k != c) rival = std::max(rival, dot(z, prototypes.row(k)));
    best = std::max(best, own - rival);
  }
  return best;
}

std::vector<std::size_t> convex_hull_2d(const Matrix& points) {
  if (points.cols() != 2) throw ParameterError("convex_hull_2d: points must be 2-D");
  const std::size_t n = points.rows();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
    if (points(a, 1) != points(b, 1)) return points(a, 1) < points(b, 1);
    return a < b;
  });
  // Drop exact duplicates.
  idx.erase(std::unique(idx.begin(), idx.end(),
                        [&](std::size_t a, std::size_t b) {
                          return points(a, 0) == points(b, 0) &&
                                 points(a, 1) == points(b, 1);
                        }),
            idx.end());
  if (idx.size() < 3) return idx;

  double scale = 0.0;
  for (double v : points.data()) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * scale * scale;
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (points(a, 0) - points(o, 0)) * (points(b, 1) - points(o, 1)) -
           (points(a, 1) - points(o, 1)) * (points(b, 0) - points(o, 0));
  };
  std::vector<std::size_t> hull(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i : idx) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], i) <= tol) --k;
    hull[k++] = i;
  }
  for (std::size_t j = idx.size() - 1, lower = k + 1; j-- > 0;) {
    const std::size_t i = idx[j];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], i) <= tol) --k;
    hull[k++] = i;
  }
  hull.resize(k - 1);
  return hull;
}

double mean_pairwise_distance(const Matrix& prototypes) {
  const std::size_t c = prototypes.rows();
  if (c < 2) return 0.0;
  double total = 0.0;
  std::vector<double> diff(prototypes.cols());
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i + 1; j < c; ++j) {
      for (std::size_t k = 0; k < diff.size(); ++k)
        diff[k] = prototypes(i, k) - prototypes(j, k);
      total += norm2(diff);
    }
  }
  return 2.0 * total / static_cast<double>(c * (c - 1));
}

HullReport flag_interior(const Matrix& prototypes) {
  const std::size_t classes = prototypes.rows();
  if (classes < 3) throw ParameterError("flag_interior: need at least 3 prototypes");
  if (prototypes.cols() < 2) throw ParameterError("flag_interior: need d_z >= 2");

  HullReport report;
  report.mean_pairwise_distance = mean_pairwise_distance(prototypes);
  if (report.mean_pairwise_distance == 0.0) {
    throw DegeneracyError("flag_interior: all prototypes coincide");
  }
  report.classes.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    HullDistance hd = hull_distance(prototypes, c);
    report.classes[c].d_ch = hd.distance;
    report.classes[c].d_ch_norm = hd.distance / report.mean_pairwise_distance;
    report.classes[c].weights = std::move(hd.weights);
  }
  report.pca = pca_project(prototypes, 2);
  report.hull_vertices = convex_hull_2d(report.pca);

  double vertex_min = std::numeric_limits<double>::infinity();
  for (std::size_t v : report.hull_vertices)
    vertex_min = std::min(vertex_min, report.classes[v].d_ch);
  // Equal distances that differ only by solver noise must not flag.
  const double slack = kFlagTolerance * report.mean_pairwise_distance;
  for (auto& cls : report.classes) cls.interior = cls.d_ch < vertex_min - slack;
  return report;
}

}  // namespace rlab

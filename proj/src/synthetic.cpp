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


#include "readout_lab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "readout_lab/errors.hpp"
#include "readout_lab/geometry.hpp"

namespace rlab {
namespace {

void fill_gaussian(std::span<double> row, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& v : row) v = normal(rng);
}

LabeledPoints balanced_clusters(const Matrix& means, std::size_t n, double noise,
                                Rng& rng) {
  const std::size_t classes = means.rows();
  if (classes == 0 || n % classes != 0) {
    throw ParameterError("clusters: n must be a positive multiple of the class count");
  }
  LabeledPoints out;
  out.x = Matrix(n, means.cols());
  out.labels.resize(n);
  out.groups.resize(n);
  const std::size_t per = n / classes;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i / per;
    auto row = out.x.row(i);
    fill_gaussian(row, noise, rng);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += means(c, j);
    out.labels[i] = c;
    out.groups[i] = i;
  }
  return out;
}

}  // namespace

std::vector<double> random_unit_vector(std::size_t d, Rng& rng) {
  if (d == 0) throw ParameterError("random_unit_vector: d must be positive");
  std::vector<double> u(d);
  double n = 0.0;
  while (n == 0.0) {
    fill_gaussian(u, 1.0, rng);
    n = norm2(u);
  }
  for (double& v : u) v /= n;
  return u;
}

LabeledPoints translation_clusters(std::size_t n, std::size_t d, double margin,
                                   std::span<const double> u, Rng& rng) {
  if (u.size() != d) throw ParameterError("translation_clusters: direction has wrong length");
  if (n < 2 || n % 2 != 0) throw ParameterError("translation_clusters: n must be even");
  Matrix means(2, d);
  for (std::size_t j = 0; j < d; ++j) {
    means(0, j) = -0.5 * margin * u[j];
    means(1, j) = 0.5 * margin * u[j];
  }
  return balanced_clusters(means, n, 1.0, rng);
}

Matrix translate_rows(const Matrix& x, std::span<const double> u, double t) {
  if (u.size() != x.cols()) throw ParameterError("translate_rows: direction has wrong length");
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += t * u[j];
  return out;
}

LabeledPoints bimodal_points(double delta, const BimodalOptions& options, Rng& rng) {
  const std::size_t d = options.d;
  if (d < 2) throw ParameterError("bimodal_points: need d >= 2");
  if (options.n_bc % 2 != 0 || options.n_bc == 0 || options.n_mode == 0) {
    throw ParameterError("bimodal_points: n_bc must be even and positive, n_mode positive");
  }
  if (!(delta >= 0.0)) throw ParameterError("bimodal_points: delta must be non-negative");
  const std::size_t n = 2 * options.n_mode + 2 * options.n_bc;
  LabeledPoints out;
  out.x = Matrix(n, d);
  out.labels.resize(n);
  out.groups.resize(n);

  std::vector<double> eps(d);
  std::size_t row = 0;
  std::size_t group = 0;
  auto emit_pair = [&](std::size_t label, double mean_x1, double mean_x2) {
    fill_gaussian(eps, options.noise, rng);
    auto a = out.x.row(row);
    auto b = out.x.row(row + 1);
    for (std::size_t j = 0; j < d; ++j) {
      a[j] = eps[j];
      b[j] = j == 0 ? eps[0] : -eps[j];
    }
    a[0] += mean_x1;
    b[0] += mean_x1;
    a[1] += mean_x2;
    b[1] -= mean_x2;
    out.labels[row] = out.labels[row + 1] = label;
    out.groups[row] = out.groups[row + 1] = group++;
    row += 2;
  };
  // One pair spans both A modes.
  for (std::size_t i = 0; i < options.n_mode; ++i) emit_pair(0, 0.0, delta);
  for (std::size_t i = 0; i < options.n_bc / 2; ++i) emit_pair(1, -delta, 0.0);
  for (std::size_t i = 0; i < options.n_bc / 2; ++i) emit_pair(2, delta, 0.0);
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const LabeledPoints& points, std::uint64_t seed) {
  const std::size_t n = points.labels.size();
  if (points.groups.size() != n) throw ParameterError("stratified_split: groups/labels size mismatch");
  std::size_t classes = 0;
  for (std::size_t y : points.labels) classes = std::max(classes, y + 1);
  std::size_t group_count = 0;
  for (std::size_t g : points.groups) group_count = std::max(group_count, g + 1);

  // Groups per class in first-appearance order.
  std::vector<std::vector<std::size_t>> by_class(classes);
  std::vector<bool> seen(group_count, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = points.groups[i];
    if (seen[g]) continue;
    seen[g] = true;
    by_class[points.labels[i]].push_back(g);
  }
  Rng rng(seed);
  std::vector<char> in_support(group_count, 0);
  for (auto& groups : by_class) {
    std::shuffle(groups.begin(), groups.end(), rng);
    for (std::size_t k = 0; k < groups.size() / 2; ++k) in_support[groups[k]] = 1;
  }
  std::vector<std::size_t> support;
  std::vector<std::size_t> query;
  for (std::size_t i = 0; i < n; ++i)
    (in_support[points.groups[i]] ? support : query).push_back(i);
  return {support, query};
}

LabeledPoints origin_shifted_clusters(const ClusterOptions& options, double spread,
                                      double shift_factor, Rng& rng) {
  Matrix means(options.classes, options.d);
  for (std::size_t c = 0; c < options.classes; ++c) {
    const auto u = random_unit_vector(options.d, rng);
    for (std::size_t j = 0; j < options.d; ++j) means(c, j) = spread * u[j];
  }
  const double shift = shift_factor * mean_pairwise_distance(means);
  const auto v = random_unit_vector(options.d, rng);
  for (std::size_t c = 0; c < options.classes; ++c)
    for (std::size_t j = 0; j < options.d; ++j) means(c, j) += shift * v[j];
  return balanced_clusters(means, options.n, options.noise, rng);
}

LabeledPoints varying_radius_clusters(const ClusterOptions& options, double r_min,
                                      double r_max, Rng& rng) {
  Matrix means(options.classes, options.d);
  for (std::size_t c = 0; c < options.classes; ++c) {
    const double r = options.classes == 1
                         ? r_min
                         : r_min + (r_max - r_min) * static_cast<double>(c) /
                                       static_cast<double>(options.classes - 1);
    const auto u = random_unit_vector(options.d, rng);
    for (std::size_t j = 0; j < options.d; ++j) means(c, j) = r * u[j];
  }
  return balanced_clusters(means, options.n, options.noise, rng);
}

}  // namespace rlab

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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "readout_lab/calibration.hpp"
#include "readout_lab/errors.hpp"
#include "readout_lab/linalg.hpp"

using rlab::Matrix;
using rlab::Rng;

namespace {

double grid_argmin(const Matrix& logits, const std::vector<std::size_t>& labels) {
  double best_t = 0.0, best = INFINITY;
  for (int i = 0; i <= 40000; ++i) {
    const double t = std::exp(std::log(1e-2) + i * (std::log(1e4) / 40000.0));
    const double v = rlab::temperature_nll(logits, labels, t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace

TEST_CASE("ece hand cases") {
  const Matrix perfect = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}});
  CHECK(rlab::ece(perfect, {0, 1, 0}).ece == 0.0);

  const Matrix two = Matrix::from_rows({{0.8, 0.2}, {0.8, 0.2}});
  const auto r = rlab::ece(two, {0, 1});
  CHECK(r.ece == doctest::Approx(0.3).epsilon(1e-12));
  const auto& bin = r.bins[12];
  CHECK(bin.count == 2);
  CHECK(bin.accuracy == 0.5);
  CHECK(bin.confidence == doctest::Approx(0.8));
  CHECK(r.bins.size() == 15);
  CHECK(r.bins[0].lower == 0.0);
  CHECK(r.bins[14].upper == 1.0);
}

TEST_CASE("ece bin edges") {
  // 0.2 * 5 = 1 exactly: ties on an edge go to the upper bin.
  const auto r = rlab::ece(Matrix::from_rows({{0.2, 0.2, 0.2, 0.2, 0.2}}), {0}, 5);
  CHECK(r.bins[1].count == 1);
  const auto top = rlab::ece(Matrix::from_rows({{1.0, 0.0}}), {0}, 15);
  CHECK(top.bins[14].count == 1);
}

TEST_CASE("ece of a uniform predictor") {
  Rng rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, 4);
  const std::size_t n = 200000;
  Matrix p(n, 5, 0.2);
  std::vector<std::size_t> labels(n);
  for (auto& l : labels) l = pick(rng);
  CHECK(rlab::ece(p, labels).ece <= 0.01);
}

TEST_CASE("ece is permutation invariant") {
  Rng rng(2);
  Matrix logits = rlab::gaussian_matrix(100, 4, rng, 2.0);
  const Matrix p = rlab::softmax_rows(logits);
  std::vector<std::size_t> labels(100);
  for (std::size_t i = 0; i < 100; ++i) labels[i] = i % 4;
  std::vector<std::size_t> perm(100);
  for (std::size_t i = 0; i < 100; ++i) perm[i] = (i * 37) % 100;
  std::vector<std::size_t> permuted_labels(100);
  for (std::size_t i = 0; i < 100; ++i) permuted_labels[i] = labels[perm[i]];
  CHECK(rlab::ece(p.select_rows(perm), permuted_labels).ece ==
        doctest::Approx(rlab::ece(p, labels).ece).epsilon(1e-14));
}

TEST_CASE("ece validation") {
  CHECK_THROWS_AS(rlab::ece(Matrix::from_rows({{0.5, 0.6}}), {0}), rlab::ValidationError);
  CHECK_THROWS_AS(rlab::ece(Matrix::from_rows({{1.5, -0.5}}), {0}), rlab::ValidationError);
  CHECK_THROWS_AS(rlab::ece(Matrix::from_rows({{0.5, 0.5}}), {2}), rlab::ValidationError);
}

TEST_CASE("temperature at the NLL optimum") {
  // softmax(ln 3, 0) = (0.75, 0.25) matches the 3:1 label split exactly.
  Matrix logits(8, 2, 0.0);
  for (std::size_t i = 0; i < 8; ++i) logits(i, 0) = std::log(3.0);
  const std::vector<std::size_t> labels{0, 0, 0, 1, 0, 0, 0, 1};
  const auto fit = rlab::temperature_fit(logits, labels);
  CHECK(std::abs(fit.temperature - 1.0) <= 1e-2);
  CHECK_FALSE(fit.degenerate);
}

TEST_CASE("temperature agrees with a grid search and scales with the logits") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(10 + seed);
    const Matrix logits = rlab::gaussian_matrix(60, 3, rng, 3.0);
    std::vector<std::size_t> labels(60);
    std::uniform_int_distribution<std::size_t> noise(0, 9);
    for (std::size_t i = 0; i < 60; ++i) {
      labels[i] = rlab::argmax(logits.row(i));
      if (noise(rng) < 3) labels[i] = (labels[i] + 1) % 3;
    }
    const auto fit = rlab::temperature_fit(logits, labels);
    const double oracle = grid_argmin(logits, labels);
    CHECK(std::abs(std::log(fit.temperature / oracle)) <= 1e-3);
    Matrix doubled = logits;
    doubled *= 2.0;
    const auto fit2 = rlab::temperature_fit(doubled, labels);
    CHECK(std::abs(fit2.temperature / fit.temperature - 2.0) <= 0.1);

    const auto before = rlab::argmax_rows(logits);
    CHECK(rlab::argmax_rows(rlab::temperature_softmax(logits, fit.temperature)) == before);
  }
}

TEST_CASE("degenerate and invalid temperature inputs") {
  const Matrix constant(4, 3, 0.7);
  const auto fit = rlab::temperature_fit(constant, {0, 1, 2, 0});
  CHECK(fit.degenerate);
  CHECK(fit.temperature == 1e-2);
  CHECK_THROWS_AS(rlab::temperature_fit(Matrix(1, 2, 0.0), {0}), rlab::ParameterError);
  CHECK_THROWS_AS(rlab::temperature_fit(Matrix(3, 2, 0.0), {1, 1, 1}), rlab::ParameterError);
}

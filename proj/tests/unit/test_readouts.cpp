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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracle.hpp"
#include "readout_lab/errors.hpp"
#include "readout_lab/readouts.hpp"

using rlab::Matrix;
using rlab::Rng;
using namespace rlab::test;

namespace {

Matrix column(std::vector<double> v) { return Matrix::column_vector(v); }

// Decision point of a 1-D, 2-class linear head: f_0(z) = f_1(z).
double boundary_1d(const rlab::FittedRidge& m) {
  return (m.bias[0] - m.bias[1]) / (m.weights(0, 1) - m.weights(0, 0));
}

}  // namespace

TEST_CASE("prototypes on the 1-D translation example") {
  const Matrix z = column({-1, 0, 1, 2});
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  const Matrix y = rlab::one_hot(labels, 2);
  const auto model = rlab::fit_prototypes(z, y);
  CHECK(model.prototypes(0, 0) == -0.5);
  CHECK(model.prototypes(1, 0) == 1.5);
  CHECK(model.class_counts == std::vector<std::size_t>{2, 2});

  const Matrix logits = rlab::prototype_logits(model, z);
  CHECK(logits(0, 0) == 0.5);
  CHECK(logits(0, 1) == -1.5);
  CHECK(rlab::accuracy(logits, labels) == 1.0);

  const Matrix shifted = column({4, 5, 6, 7});
  const auto moved = rlab::fit_prototypes(shifted, y);
  CHECK(rlab::accuracy(rlab::prototype_logits(moved, shifted), labels) == 0.5);
  for (std::size_t q : rlab::argmax_rows(rlab::prototype_logits(moved, shifted))) CHECK(q == 1);
}

TEST_CASE("ridge on the 1-D translation example") {
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  const Matrix y = rlab::one_hot(labels, 2);
  const Matrix shifted = column({4, 5, 6, 7});
  const auto ridge = rlab::fit_ridge(shifted, y, 0.01);
  CHECK(std::abs(boundary_1d(ridge) - 5.5) <= 0.05);
  CHECK(rlab::accuracy(rlab::ridge_logits(ridge, shifted), labels) == 1.0);
  const auto plain = rlab::fit_ridge(column({-1, 0, 1, 2}), y, 0.01);
  CHECK(rlab::accuracy(rlab::ridge_logits(plain, column({-1, 0, 1, 2})), labels) == 1.0);
}

TEST_CASE("prototypes on the 2-D inclusion example") {
  const Matrix z = Matrix::from_rows(
      {{-3, 1}, {-3, -1}, {3, 1}, {3, -1}, {-2, 0}, {-1, 0}, {1, 0}, {2, 0}});
  const std::vector<std::size_t> labels{0, 0, 0, 0, 1, 1, 2, 2};
  const auto model = rlab::fit_prototypes(z, rlab::one_hot(labels, 3));
  CHECK(model.prototypes == Matrix::from_rows({{0, 0}, {-1.5, 0}, {1.5, 0}}));
  CHECK(rlab::accuracy(rlab::prototype_logits(model, z), labels) == 0.5);
}

TEST_CASE("fit_prototypes validation") {
  const Matrix z(2, 2, 1.0);
  const Matrix y = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}});
  CHECK_THROWS_WITH_AS(rlab::fit_prototypes(z, y), "class without support: 2",
                       rlab::ValidationError);
  const auto single = rlab::fit_prototypes(
      Matrix::from_rows({{1, 2}, {3, 4}}), rlab::one_hot(std::vector<std::size_t>{1, 0}, 2));
  CHECK(single.prototypes == Matrix::from_rows({{3, 4}, {1, 2}}));
  CHECK_THROWS_AS(rlab::prototype_logits(single, Matrix(1, 3)), rlab::ParameterError);
}

TEST_CASE("zero query ties to class 0") {
  const auto model = rlab::fit_prototypes(
      Matrix::from_rows({{1, 0}, {0, 1}}), rlab::one_hot(std::vector<std::size_t>{0, 1}, 2));
  const Matrix logits = rlab::prototype_logits(model, Matrix(1, 2, 0.0));
  CHECK(logits(0, 0) == 0.0);
  CHECK(logits(0, 1) == 0.0);
  CHECK(rlab::argmax_rows(logits)[0] == 0);
}

TEST_CASE("prototype softmax") {
  Rng rng(3);
  const Matrix zs = rlab::gaussian_matrix(9, 4, rng);
  const std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2, 0, 1, 2};
  const auto model = rlab::fit_prototypes(zs, rlab::one_hot(labels, 3));
  const Matrix zq = rlab::gaussian_matrix(5, 4, rng);
  const Matrix p = rlab::prototype_softmax(model, zq);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  const Matrix uniform = rlab::prototype_softmax(model, Matrix(1, 4, 0.0));
  for (double v : uniform.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  double last = 0.0;
  for (double s : {0.5, 1.0, 2.0, 4.0, 8.0, 100.0}) {
    Matrix q = zq.select_rows(std::vector<std::size_t>{0});
    q *= s;
    const Matrix ps = rlab::prototype_softmax(model, q);
    const double top = *std::max_element(ps.data().begin(), ps.data().end());
    CHECK(top >= last);
    last = top;
  }
}

TEST_CASE("ridge dual equals primal") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Matrix zs = rlab::gaussian_matrix(6, 4, rng);
    std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2};
    const Matrix ys = rlab::one_hot(labels, 3);
    const auto model = rlab::fit_ridge(zs, ys, 10.0);

    const Eigen::MatrixXd za = to_eigen(append_ones_column(zs));
    const Eigen::MatrixXd lhs = za.transpose() * za + 10.0 * Eigen::MatrixXd::Identity(5, 5);
    const Eigen::MatrixXd primal = lhs.ldlt().solve(za.transpose() * to_eigen(ys));
    double diff = 0.0;
    double norm = primal.norm();
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < 3; ++c) diff += std::pow(model.weights(i, c) - primal(i, c), 2);
    for (int c = 0; c < 3; ++c) diff += std::pow(model.bias[c] - primal(4, c), 2);
    CHECK(std::sqrt(diff) / norm <= 1e-8);
    CHECK(rlab::ridge_normal_residual(model, zs, ys) <= 1e-6);
  }
}

TEST_CASE("ridge limits and validation") {
  Rng rng(4);
  const Matrix zs = rlab::gaussian_matrix(6, 4, rng);
  const Matrix ys = rlab::one_hot(std::vector<std::size_t>{0, 1, 2, 0, 1, 2}, 3);
  const auto huge = rlab::fit_ridge(zs, ys, 1e12);
  CHECK(frobenius_norm(huge.weights) + rlab::norm2(huge.bias) <= 1e-6);
  CHECK_THROWS_AS(rlab::fit_ridge(zs, ys, 0.0), rlab::ParameterError);
  CHECK_THROWS_AS(rlab::fit_ridge(zs, ys, -1.0), rlab::ParameterError);

  const rlab::FittedRidge bias_only{Matrix(4, 2, 0.0), {1.0, 0.0}, 1.0};
  for (std::size_t p : rlab::argmax_rows(rlab::ridge_logits(bias_only, zs))) CHECK(p == 0);
  CHECK_THROWS_AS(rlab::ridge_logits(bias_only, Matrix(2, 3)), rlab::ParameterError);
}

TEST_CASE("ridge logits match direct arithmetic") {
  Rng rng(5);
  const Matrix zs = rlab::gaussian_matrix(8, 5, rng);
  const Matrix ys = rlab::one_hot(std::vector<std::size_t>{0, 1, 0, 1, 0, 1, 0, 1}, 2);
  const auto model = rlab::fit_ridge(zs, ys, 10.0);
  const Matrix zq = rlab::gaussian_matrix(4, 5, rng);
  const Matrix logits = rlab::ridge_logits(model, zq);
  for (std::size_t q = 0; q < 4; ++q)
    for (std::size_t c = 0; c < 2; ++c) {
      double expected = model.bias[c];
      for (std::size_t i = 0; i < 5; ++i) expected += zq(q, i) * model.weights(i, c);
      CHECK(std::abs(logits(q, c) - expected) <= 1e-10);
    }
}

TEST_CASE("ridge accuracy survives translation") {
  // Small lambda: with 20 supports a strong penalty on the bias column would
  // stop it from absorbing the shift.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(50 + seed);
    Matrix zs = rlab::gaussian_matrix(20, 3, rng);
    Matrix zq = rlab::gaussian_matrix(20, 3, rng);
    std::vector<std::size_t> labels(20);
    for (std::size_t i = 0; i < 20; ++i) {
      labels[i] = i % 2;
      zs(i, 0) += labels[i] ? 3.0 : -3.0;
      zq(i, 0) += labels[i] ? 3.0 : -3.0;
    }
    const Matrix ys = rlab::one_hot(labels, 2);
    const double base = rlab::accuracy(rlab::ridge_logits(rlab::fit_ridge(zs, ys, 1e-3), zq), labels);
    Matrix ts = zs;
    Matrix tq = zq;
    for (std::size_t i = 0; i < 20; ++i) {
      ts(i, 0) += 5.0;
      tq(i, 0) += 5.0;
    }
    const double moved = rlab::accuracy(rlab::ridge_logits(rlab::fit_ridge(ts, ys, 1e-3), tq), labels);
    CHECK(moved == base);
  }
}

TEST_CASE("logistic head") {
  SUBCASE("separable 1-D") {
    const Matrix z = column({-2, -1.5, -1, 1, 1.5, 2});
    const std::vector<std::size_t> labels{0, 0, 0, 1, 1, 1};
    const auto m = rlab::fit_logistic(z, rlab::one_hot(labels, 2), {0.1, 2000, 1e-6});
    CHECK(rlab::accuracy(rlab::logistic_logits(m, z), labels) == 1.0);
    CHECK((m.gradient_norm <= 1e-6 || m.iterations_used == 2000));
  }
  SUBCASE("prior-only limit") {
    Rng rng(6);
    const Matrix z = rlab::gaussian_matrix(40, 3, rng);
    std::vector<std::size_t> labels(40, 0);
    for (std::size_t i = 0; i < 10; ++i) labels[i] = 1;
    const auto m = rlab::fit_logistic(z, rlab::one_hot(labels, 2), {1e4, 5000, 1e-9});
    CHECK(frobenius_norm(m.weights) <= 1e-4);
    const Matrix p = rlab::logistic_probabilities(m, z);
    CHECK(p(0, 0) == doctest::Approx(0.75).epsilon(1e-3));
  }
  SUBCASE("Bayes boundary for symmetric Gaussians") {
    Rng rng(7);
    const std::size_t n = 4000;
    Matrix z = rlab::gaussian_matrix(n, 1, rng);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i % 2;
      z(i, 0) += labels[i] ? 3.0 : 1.0;  // midpoint 2
    }
    const auto m = rlab::fit_logistic(z, rlab::one_hot(labels, 2), {1e-3, 5000, 1e-8});
    const double boundary = (m.bias[0] - m.bias[1]) / (m.weights(0, 1) - m.weights(0, 0));
    CHECK(std::abs(boundary - 2.0) <= 0.1);
  }
}

TEST_CASE("recall per class") {
  const Matrix scores = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {1, 0}});
  const std::vector<std::size_t> labels{0, 1, 1, 0};
  const auto recall = rlab::per_class_recall(scores, labels, 3);
  CHECK(recall == std::vector<double>{1.0, 0.5, 0.0});
  CHECK(rlab::accuracy(scores, labels) == 0.75);
}

TEST_CASE("ridge inherits exact inclusion with balanced classes") {
  // Column c of Zs~^T Y is n_c [p_c; 1], so an included prototype gives an
  // included weight column when every class has the same count.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t n = 6, d = 5;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double w = unit(rng);
    Matrix z = rlab::gaussian_matrix(3 * n, d, rng, 2.0);
    std::vector<std::size_t> labels(3 * n);
    for (std::size_t i = 0; i < 3 * n; ++i) labels[i] = i / n;
    // Move class 0 so its mean is w p_1 + (1 - w) p_2.
    std::vector<double> shift(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        shift[j] += (w * z(n + i, j) + (1.0 - w) * z(2 * n + i, j) - z(i, j)) / n;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) z(i, j) += shift[j];

    const double lambda = 0.1 + 10.0 * unit(rng);
    const auto model = rlab::fit_ridge(z, rlab::one_hot(labels, 3), lambda);
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(model.weights(j, 0) ==
            doctest::Approx(w * model.weights(j, 1) + (1.0 - w) * model.weights(j, 2))
                .epsilon(1e-9));
    }
    CHECK(model.bias[0] ==
          doctest::Approx(w * model.bias[1] + (1.0 - w) * model.bias[2]).epsilon(1e-9));

    const Matrix q = rlab::gaussian_matrix(200, d, rng, 3.0);
    const Matrix f = rlab::ridge_logits(model, q);
    for (std::size_t i = 0; i < q.rows(); ++i)
      CHECK(f(i, 0) <= std::max(f(i, 1), f(i, 2)) + 1e-9);
  }
}

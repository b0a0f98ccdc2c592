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

#include "doctest.h"
#include "oracle.hpp"
#include "readout_lab/errors.hpp"
#include "readout_lab/linalg.hpp"

using rlab::Matrix;
using rlab::Rng;
using namespace rlab::test;

namespace {

double relative_residual(const Matrix& k, const Matrix& x, const Matrix& b) {
  return frobenius_norm(matmul(k, x) - b) / frobenius_norm(b);
}

double orthonormality_error(const Matrix& q) {
  const Matrix g = matmul_tn(q, q);
  return max_abs_diff(g, Matrix::identity(q.cols()));
}

}  // namespace

TEST_CASE("solve_spd trivial cases") {
  Rng rng(1);
  const Matrix b = rlab::gaussian_matrix(3, 2, rng);
  CHECK(max_abs_diff(rlab::solve_spd(Matrix::identity(3), b), b) == 0.0);
  const Matrix x = rlab::solve_spd(Matrix::from_rows({{2}}), Matrix::from_rows({{4}}));
  CHECK(x(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("solve_spd residual on random SPD systems") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix k = random_spd(5, rng);
    const Matrix b = rlab::gaussian_matrix(5, 3, rng);
    const Matrix k_copy = k;
    const Matrix b_copy = b;
    const Matrix x = rlab::solve_spd(k, b);
    CHECK(relative_residual(k, x, b) <= 1e-8);
    CHECK(k == k_copy);
    CHECK(b == b_copy);
    // Recover a planted solution.
    const Matrix planted = rlab::gaussian_matrix(5, 2, rng);
    const Matrix got = rlab::solve_spd(k, matmul(k, planted));
    CHECK(frobenius_norm(got - planted) / frobenius_norm(planted) <= 1e-8);
  }
}

TEST_CASE("solve_spd reports the failing pivot") {
  const Matrix k = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, -1}});
  try {
    rlab::solve_spd(k, Matrix(3, 1, 1.0));
    FAIL("expected NotPositiveDefinite");
  } catch (const rlab::NotPositiveDefinite& e) {
    CHECK(e.pivot() == 2);
  }
  CHECK_THROWS_AS(rlab::solve_spd(Matrix::from_rows({{1, 2}, {0, 1}}), Matrix(2, 1)),
                  rlab::ParameterError);
}

TEST_CASE("truncated_svd diagonal and rank-one cases") {
  const Matrix d = Matrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  const rlab::Svd svd = rlab::truncated_svd(d, 2);
  REQUIRE(svd.s.size() == 2);
  CHECK(svd.s[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(svd.s[1] == doctest::Approx(2.0).epsilon(1e-12));
  Matrix us = svd.u;
  for (std::size_t r = 0; r < us.rows(); ++r)
    for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= svd.s[c];
  const Matrix recon = matmul_nt(us, svd.v);
  CHECK(max_abs_diff(recon, Matrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 0}})) <= 1e-12);

  const Matrix u = Matrix::column_vector(std::vector<double>{1, 2, 2});
  const Matrix v = Matrix::column_vector(std::vector<double>{0, 3, 4});
  const rlab::Svd one = rlab::truncated_svd(matmul_nt(u, v), 1);
  CHECK(one.s[0] == doctest::Approx(15.0).epsilon(1e-12));
  Matrix u1 = one.u;
  u1 *= one.s[0];
  CHECK(max_abs_diff(matmul_nt(u1, one.v), matmul_nt(u, v)) <= 1e-12);
}

TEST_CASE("truncated_svd matches the eigenvalues of M^T M") {
  // A flat Gaussian spectrum needs more subspace iterations than the
  // feature pipeline's default of 2 to reach 1e-6.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const Matrix m = rlab::gaussian_matrix(20, 15, rng);
    const rlab::Svd svd = rlab::truncated_svd(m, 5, 6, seed);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(matmul_tn(m, m)));
    const Eigen::VectorXd ev = eig.eigenvalues().reverse();
    for (std::size_t i = 0; i < 5; ++i) {
      const double expected = std::sqrt(ev(static_cast<Eigen::Index>(i)));
      CHECK(std::abs(svd.s[i] - expected) / expected <= 1e-6);
    }
    CHECK(orthonormality_error(svd.u) <= 1e-6);
    CHECK(orthonormality_error(svd.v) <= 1e-6);
    CHECK(std::is_sorted(svd.s.rbegin(), svd.s.rend()));
  }
}

TEST_CASE("truncated_svd reconstruction is near-optimal and deterministic") {
  Rng rng(7);
  const Matrix m = rlab::gaussian_matrix(30, 12, rng);
  const rlab::Svd svd = rlab::truncated_svd(m, 4, 2, 9);
  Matrix us = svd.u;
  for (std::size_t r = 0; r < us.rows(); ++r)
    for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= svd.s[c];
  const double err = frobenius_norm(m - matmul_nt(us, svd.v));
  Eigen::JacobiSVD<Eigen::MatrixXd> exact(to_eigen(m));
  double best = 0.0;
  for (Eigen::Index i = 4; i < exact.singularValues().size(); ++i)
    best += exact.singularValues()(i) * exact.singularValues()(i);
  CHECK(err <= 1.5 * std::sqrt(best));

  const rlab::Svd again = rlab::truncated_svd(m, 4, 2, 9);
  CHECK(again.u == svd.u);
  CHECK(again.s == svd.s);
  CHECK(again.v == svd.v);
  CHECK_THROWS_AS(rlab::truncated_svd(m, 0), rlab::ParameterError);
  CHECK_THROWS_AS(rlab::truncated_svd(m, 13), rlab::ParameterError);
}

TEST_CASE("jacobi_svd handles rank deficiency and wide inputs") {
  const Matrix m = Matrix::from_rows({{1, 2, 3, 4}, {2, 4, 6, 8}});
  const rlab::Svd svd = rlab::jacobi_svd(m);
  REQUIRE(svd.s.size() == 2);
  CHECK(svd.s[1] <= 1e-12);
  CHECK(orthonormality_error(svd.u) <= 1e-12);
  CHECK(orthonormality_error(svd.v) <= 1e-12);
}

TEST_CASE("pca_project") {
  SUBCASE("axis aligned") {
    const Matrix x = Matrix::from_rows({{-2, 0, 0}, {1, 0, 0}, {1, 0, 0}});
    const Matrix p = rlab::pca_project(x, 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(std::abs(p(i, 0)) - std::abs(x(i, 0))) <= 1e-12);
  }
  SUBCASE("identical rows") {
    const Matrix x(4, 3, 2.5);
    const Matrix p = rlab::pca_project(x, 2);
    for (double v : p.data()) CHECK(v == 0.0);
  }
  SUBCASE("variances match covariance eigenvalues") {
    Rng rng(11);
    Matrix x = rlab::gaussian_matrix(10, 4, rng);
    for (std::size_t r = 0; r < 10; ++r) x(r, 1) *= 3.0;
    const Matrix p = rlab::pca_project(x, 2);
    Eigen::MatrixXd e = to_eigen(x);
    e.rowwise() -= e.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e.transpose() * e / 9.0);
    const Eigen::VectorXd ev = eig.eigenvalues().reverse();
    for (std::size_t c = 0; c < 2; ++c) {
      double var = 0.0;
      for (std::size_t r = 0; r < 10; ++r) var += p(r, c) * p(r, c);
      var /= 9.0;
      CHECK(var == doctest::Approx(ev(static_cast<Eigen::Index>(c))).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(rlab::pca_project(Matrix(3, 2, 1.0), 3), rlab::ParameterError);
  CHECK_THROWS_AS(rlab::pca_project(Matrix(1, 2, 1.0), 1), rlab::ParameterError);
}

TEST_CASE("orthonormalize_columns completes collapsed columns") {
  const Matrix a = Matrix::from_rows({{1, 2, 0}, {0, 0, 0}, {0, 0, 0}});
  const Matrix q = rlab::orthonormalize_columns(a);
  CHECK(orthonormality_error(q) <= 1e-12);
}

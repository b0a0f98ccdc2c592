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
#include "readout_lab/tape.hpp"

using rlab::Matrix;
using rlab::Rng;
using rlab::Tape;
using rlab::Var;

namespace {

// Reduces any matrix node to a scalar with fixed random weights, so every
// output entry contributes a distinct gradient.
Var weighted_sum(Tape& t, Var v, std::uint64_t seed) {
  const Matrix& value = t.value(v);
  Rng rng(seed);
  const Matrix w = rlab::gaussian_matrix(value.rows(), value.cols(), rng);
  const Var prod = t.hadamard(v, t.leaf(w));
  const Var left = t.leaf(Matrix(1, value.rows(), 1.0));
  const Var right = t.leaf(Matrix(value.cols(), 1, 1.0));
  return t.matmul(t.matmul(left, prod), right);
}

std::vector<Matrix> random_params(std::initializer_list<std::pair<int, int>> shapes,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Matrix> out;
  for (auto [r, c] : shapes) out.push_back(rlab::gaussian_matrix(r, c, rng));
  return out;
}

}  // namespace

TEST_CASE("grad_check on closed-form functions") {
  const auto params = random_params({{3, 4}}, 1);
  const double linear = rlab::grad_check(
      [](Tape& t, std::span<const Var> p) {
        const Matrix& w = t.value(p[0]);
        const Var left = t.leaf(Matrix(1, w.rows(), 1.0));
        const Var right = t.leaf(Matrix(w.cols(), 1, 1.0));
        return t.matmul(t.matmul(left, p[0]), right);
      },
      params);
  CHECK(linear <= 1e-10);

  const double quadratic = rlab::grad_check(
      [](Tape& t, std::span<const Var> p) {
        const Var sq = t.hadamard(p[0], p[0]);
        const Matrix& w = t.value(p[0]);
        const Var left = t.leaf(Matrix(1, w.rows(), 1.0));
        const Var right = t.leaf(Matrix(w.cols(), 1, 1.0));
        return t.matmul(t.matmul(left, sq), right);
      },
      params);
  CHECK(quadratic <= 1e-8);

  Tape t;
  const Var w = t.leaf(params[0]);
  const Var sq = t.hadamard(w, w);
  const Var root = t.matmul(t.matmul(t.leaf(Matrix(1, 3, 1.0)), sq),
                            t.leaf(Matrix(4, 1, 1.0)));
  t.backward(root);
  Matrix twice = params[0];
  twice *= 2.0;
  CHECK(rlab::test::max_abs_diff(t.grad(w), twice) <= 1e-15);
}

TEST_CASE("grad_check validates its inputs") {
  const auto params = random_params({{2, 2}}, 2);
  auto f = [](Tape& t, std::span<const Var> p) { return weighted_sum(t, p[0], 3); };
  CHECK_THROWS_AS(rlab::grad_check(f, params, 1e-7), rlab::ParameterError);
  CHECK_THROWS_AS(rlab::grad_check(f, params, 1e-2), rlab::ParameterError);
  auto bad = [](Tape& t, std::span<const Var> p) {
    Var s = weighted_sum(t, p[0], 3);
    return t.scale(s, std::numeric_limits<double>::infinity());
  };
  CHECK_THROWS_AS(rlab::grad_check(bad, params), rlab::EvaluationError);
}

TEST_CASE("every op matches central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SUBCASE("matmul with transposes") {
      const auto p = random_params({{3, 4}, {5, 4}, {3, 5}}, seed);
      CHECK(rlab::grad_check([&](Tape& t, std::span<const Var> v) {
              const Var ab = t.matmul(v[0], v[1], false, true);   // 3 x 5
              const Var c = t.matmul(v[2], ab, true, false);       // 5 x 5
              const Var d = t.matmul(c, v[1], true, false);        // 5 x 4
              return weighted_sum(t, d, seed);
            }, p) <= 1e-6);
    }
    SUBCASE("add, broadcast add, scale, append_ones") {
      const auto p = random_params({{3, 4}, {3, 4}, {1, 4}}, seed);
      CHECK(rlab::grad_check([&](Tape& t, std::span<const Var> v) {
              const Var s = t.add(t.add(v[0], v[1]), v[2]);
              return weighted_sum(t, t.append_ones(t.scale(s, -1.7)), seed);
            }, p) <= 1e-6);
    }
    SUBCASE("hadamard and relu") {
      const auto p = random_params({{4, 3}, {4, 3}}, seed);
      CHECK(rlab::grad_check([&](Tape& t, std::span<const Var> v) {
              return weighted_sum(t, t.relu(t.hadamard(v[0], v[1])), seed);
            }, p) <= 1e-6);
    }
    SUBCASE("softmax cross-entropy with smoothing") {
      const auto p = random_params({{5, 3}}, seed);
      const std::vector<std::size_t> labels{0, 2, 1, 1, 0};
      const Matrix targets = rlab::one_hot(labels, 3);
      CHECK(rlab::grad_check([&](Tape& t, std::span<const Var> v) {
              return t.softmax_cross_entropy(v[0], targets, 0.1);
            }, p) <= 1e-6);
    }
    SUBCASE("row pooling") {
      const auto p = random_params({{6, 3}}, seed);
      CHECK(rlab::grad_check([&](Tape& t, std::span<const Var> v) {
              return weighted_sum(t, t.pool_rows(v[0], {{0, 1, 2}, {3}, {4, 5}, {1}}), seed);
            }, p) <= 1e-6);
    }
    SUBCASE("hop attention") {
      const auto p = random_params({{4, 3}, {4, 3}, {4, 3}, {4, 3}}, seed);
      CHECK(rlab::grad_check([&](Tape& t, std::span<const Var> v) {
              const std::vector<Var> hops{v[0], v[1], v[2], v[3]};
              // The query doubles as hop 0, as in the encoder.
              return weighted_sum(t, t.hop_attention(v[0], hops), seed);
            }, p) <= 1e-6);
    }
    SUBCASE("SPD solve through a symmetric parametrization") {
      const auto p = random_params({{4, 4}, {4, 2}}, seed);
      CHECK(rlab::grad_check([&](Tape& t, std::span<const Var> v) {
              const Var k = t.add(t.matmul(v[0], v[0], false, true),
                                  t.leaf(Matrix::identity(4)));
              return weighted_sum(t, t.solve_spd(k, v[1]), seed);
            }, p) <= 1e-6);
    }
  }
}

TEST_CASE("solve adjoint closed form") {
  Rng rng(5);
  const Matrix k = rlab::test::random_spd(3, rng);
  const Matrix b = rlab::gaussian_matrix(3, 2, rng);
  const Matrix xbar = rlab::gaussian_matrix(3, 2, rng);
  Tape t;
  const Var kv = t.leaf(k);
  const Var bv = t.leaf(b);
  const Var x = t.solve_spd(kv, bv);
  const Var root = t.matmul(t.matmul(t.leaf(Matrix(1, 3, 1.0)), t.hadamard(x, t.leaf(xbar))),
                            t.leaf(Matrix(2, 1, 1.0)));
  t.backward(root);
  const Matrix ybar = rlab::solve_spd(k, xbar);
  Matrix kbar = matmul_nt(ybar, t.value(x));
  kbar *= -1.0;
  CHECK(rlab::test::max_abs_diff(t.grad(bv), ybar) <= 1e-12);
  CHECK(rlab::test::max_abs_diff(t.grad(kv), kbar) <= 1e-12);
}

TEST_CASE("query cross-entropy through the ridge solve") {
  const std::vector<std::size_t> ys{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
  const Matrix y_support = rlab::one_hot(ys, 3);
  const Matrix y_query = rlab::one_hot(ys, 3);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto p = random_params({{12, 8}, {12, 8}}, 40 + seed);
    const double err = rlab::grad_check([&](Tape& t, std::span<const Var> v) {
      const Var logits = rlab::ridge_logits_on_tape(t, v[0], y_support, v[1], 10.0);
      return t.softmax_cross_entropy(logits, y_query, 0.1);
    }, p);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("tape structure") {
  Tape t;
  const Var a = t.leaf(Matrix(2, 2, 1.0));
  const Var unused = t.leaf(Matrix(2, 2, 3.0));
  const Var b = t.scale(a, 2.0);
  const Var root = t.matmul(t.matmul(t.leaf(Matrix(1, 2, 1.0)), b), t.leaf(Matrix(2, 1, 1.0)));
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t parent : t.parents(Var{i})) CHECK(parent < i);
  t.backward(root);
  CHECK(t.op(b) == rlab::TapeOp::Scale);
  for (double g : t.grad(a).data()) CHECK(g == 2.0);
  for (double g : t.grad(unused).data()) CHECK(g == 0.0);
  CHECK_THROWS_AS(t.backward(b), rlab::ParameterError);
  CHECK_THROWS_AS(t.softmax_cross_entropy(a, Matrix(2, 2, 0.5), 1.0), rlab::ParameterError);
}

TEST_CASE("broadcast gradient sums over rows") {
  Tape t;
  const Var a = t.leaf(Matrix(3, 2, 0.0));
  const Var bias = t.leaf(Matrix(1, 2, 0.0));
  const Var s = t.add(a, bias);
  const Var root = t.matmul(t.matmul(t.leaf(Matrix(1, 3, 1.0)), s), t.leaf(Matrix(2, 1, 1.0)));
  t.backward(root);
  for (double g : t.grad(bias).data()) CHECK(g == 3.0);
}

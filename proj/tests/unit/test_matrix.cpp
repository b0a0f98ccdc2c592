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
#include <limits>
#include <vector>

#include "doctest.h"
#include "readout_lab/errors.hpp"
#include "readout_lab/matrix.hpp"

using rlab::Matrix;

TEST_CASE("construction checks data length") {
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), rlab::ParameterError);
  Matrix m(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.size() == 6);
  CHECK(m(1, 2) == 1.5);
}

TEST_CASE("products agree with each other") {
  const Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Matrix b = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  const Matrix ab = matmul(a, b);
  CHECK(ab == Matrix::from_rows({{4, 5}, {10, 11}}));
  CHECK(matmul_tn(a.transpose(), b) == ab);
  CHECK(matmul_nt(a, b.transpose()) == ab);
  CHECK_THROWS_AS(matmul(a, a), rlab::ParameterError);
}

TEST_CASE("stacking and bias column") {
  const Matrix a = Matrix::from_rows({{1, 2}});
  const Matrix b = Matrix::from_rows({{3, 4}});
  const std::vector<Matrix> blocks{a, b};
  CHECK(rlab::vstack(blocks) == Matrix::from_rows({{1, 2}, {3, 4}}));
  CHECK(rlab::hstack(blocks) == Matrix::from_rows({{1, 2, 3, 4}}));
  CHECK(rlab::append_ones_column(a) == Matrix::from_rows({{1, 2, 1}}));
  CHECK(rlab::add_row_broadcast(Matrix::from_rows({{1, 1}, {2, 2}}), b) ==
        Matrix::from_rows({{4, 5}, {5, 6}}));
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  const std::vector<double> v{1.0, 3.0, 3.0};
  CHECK(rlab::argmax(v) == 1);
  const std::vector<double> zeros(4, 0.0);
  CHECK(rlab::argmax(zeros) == 0);
}

TEST_CASE("softmax is stable for large logits") {
  const Matrix logits = Matrix::from_rows({{1000.0, 1000.0}, {std::log(3.0), 0.0}});
  const Matrix p = rlab::softmax_rows(logits);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
  const Matrix lp = rlab::log_softmax_rows(logits);
  CHECK(std::exp(lp(1, 1)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("one-hot round trip and validation") {
  const std::vector<std::size_t> labels{2, 0, 1};
  const Matrix y = rlab::one_hot(labels, 3);
  CHECK(rlab::labels_from_one_hot(y) == labels);
  Matrix bad = y;
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(rlab::labels_from_one_hot(bad), rlab::ValidationError);
}

TEST_CASE("finiteness check") {
  Matrix m(1, 2, 0.0);
  CHECK(m.all_finite());
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(m.all_finite());
}

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

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rlab {

/// Dense row-major matrix of doubles.
///
/// The carrier for embeddings, weights, adjacencies and one-hot labels.
/// Row vectors are 1 x n matrices; scalars produced by the tape are 1 x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);
  static Matrix column_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  /// Rows listed in `indices`, in that order.
  Matrix select_rows(std::span<const std::size_t> indices) const;
  /// Columns [first, first + count).
  Matrix col_block(std::size_t first, std::size_t count) const;

  bool all_finite() const noexcept;
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
/// [a | 1]
Matrix append_ones_column(const Matrix& a);
/// Adds the 1 x cols row vector `bias` to every row of `a`.
Matrix add_row_broadcast(Matrix a, const Matrix& bias);
/// Row-wise concatenation; all inputs share a column count.
Matrix vstack(std::span<const Matrix> blocks);
/// Column-wise concatenation; all inputs share a row count.
Matrix hstack(std::span<const Matrix> blocks);

double frobenius_norm(const Matrix& a);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Index of the row maximum; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);
std::vector<std::size_t> argmax_rows(const Matrix& m);

/// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& logits);
Matrix log_softmax_rows(const Matrix& logits);

/// n x classes one-hot matrix.
Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes);
/// Inverse of one_hot; throws ValidationError on rows that are not one-hot.
std::vector<std::size_t> labels_from_one_hot(const Matrix& y);

}  // namespace rlab

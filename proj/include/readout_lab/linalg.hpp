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

#include <cstdint>
#include <random>
#include <vector>

#include "readout_lab/matrix.hpp"

namespace rlab {

using Rng = std::mt19937_64;

/// Independent stream seed for (base, stream) via a splitmix64 finalizer.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                       double stddev = 1.0);

/// Lower-triangular Cholesky factorization K = L L^T.
///
/// Throws ParameterError when K is not square or not symmetric to 1e-10
/// relative, and NotPositiveDefinite (carrying the pivot) when a diagonal
/// pivot is <= 0.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& k);

  const Matrix& factor() const noexcept { return lower_; }
  std::size_t order() const noexcept { return lower_.rows(); }
  /// Solves K X = B.
  Matrix solve(const Matrix& b) const;

 private:
  Matrix lower_;
};

/// Solves K X = B for symmetric positive-definite K.
Matrix solve_spd(const Matrix& k, const Matrix& b);

struct Svd {
  Matrix u;               // n x r, orthonormal columns
  std::vector<double> s;  // r values, non-increasing, >= 0
  Matrix v;               // m x r, orthonormal columns
};

/// Thin SVD by one-sided Jacobi rotations, r = min(n, m).
///
/// Null-space columns of U and V are completed to orthonormal sets. Each
/// column pair is sign-normalized so that the largest-magnitude entry of the
/// U column is positive.
Svd jacobi_svd(const Matrix& a);

/// Randomized range finder (Gaussian test matrix of width k + 8, capped at
/// min(n, m)) with `power_iters` subspace iterations, followed by a Jacobi SVD
/// of the projected matrix. Deterministic in (m, k, power_iters, seed).
Svd truncated_svd(const Matrix& m, std::size_t k, std::size_t power_iters = 2,
                  std::uint64_t seed = 0);

/// Projection of mean-centered X onto its top-k principal directions.
Matrix pca_project(const Matrix& x, std::size_t k);

/// Orthonormalizes the columns of `a` in place order (modified Gram-Schmidt,
/// two passes). Columns that collapse numerically are replaced by unit
/// vectors completing the basis.
Matrix orthonormalize_columns(const Matrix& a);

}  // namespace rlab

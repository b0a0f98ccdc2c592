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

#include "readout_lab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "readout_lab/errors.hpp"

namespace rlab {
namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr std::size_t kOversample = 8;

double column_dot(const Matrix& a, std::size_t i, const Matrix& b,
                  std::size_t j) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * b(r, j);
  return s;
}

double column_norm(const Matrix& a, std::size_t j) {
  return std::sqrt(column_dot(a, j, a, j));
}

// Fills column `col` with the standard basis vector that keeps the largest
// norm after projection onto the complement of the first `col` columns.
void complete_column(Matrix& q, std::size_t col) {
  const std::size_t n = q.rows();
  std::vector<double> best;
  double best_norm = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> v(n, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < col; ++j) {
        double proj = 0.0;
        for (std::size_t r = 0; r < n; ++r) proj += q(r, j) * v[r];
        for (std::size_t r = 0; r < n; ++r) v[r] -= proj * q(r, j);
      }
    }
    const double nv = norm2(v);
    if (nv > best_norm) {
      best_norm = nv;
      best = std::move(v);
    }
  }
  // Some basis vector always keeps norm >= sqrt((n - col) / n).
  if (best_norm < 1e-8) {
    throw DegeneracyError("cannot complete orthonormal basis: more columns than rows");
  }
  for (std::size_t r = 0; r < n; ++r) q(r, col) = best[r] / best_norm;
}

}  // namespace

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                       double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

Cholesky::Cholesky(const Matrix& k) {
  const std::size_t n = k.rows();
  if (k.cols() != n || n == 0) {
    throw ParameterError("cholesky: matrix must be square and non-empty");
  }
  double scale = 0.0;
  for (double v : k.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(k(i, j) - k(j, i)) > kSymmetryTol * scale) {
        throw ParameterError("cholesky: matrix is not symmetric at (" +
                             std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
  lower_ = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = k(j, j);
    for (std::size_t p = 0; p < j; ++p) diag -= lower_(j, p) * lower_(j, p);
    if (!(diag > 0.0)) throw NotPositiveDefinite(j);
    const double ljj = std::sqrt(diag);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = k(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= lower_(i, p) * lower_(j, p);
      lower_(i, j) = s / ljj;
    }
  }
}

Matrix Cholesky::solve(const Matrix& b) const {
  const std::size_t n = order();
  if (b.rows() != n) {
    throw ParameterError("cholesky solve: right-hand side has " +
                         std::to_string(b.rows()) + " rows, expected " +
                         std::to_string(n));
  }
  Matrix x = b;
  const std::size_t m = b.cols();
  // Forward substitution L y = b.
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t p = 0; p < i; ++p) {
      const double lip = lower_(i, p);
      if (lip == 0.0) continue;
      auto xp = x.row(p);
      for (std::size_t c = 0; c < m; ++c) xi[c] -= lip * xp[c];
    }
    const double inv = 1.0 / lower_(i, i);
    for (double& v : xi) v *= inv;
  }
  // Back substitution L^T x = y.
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    for (std::size_t p = ii + 1; p < n; ++p) {
      const double lpi = lower_(p, ii);
      if (lpi == 0.0) continue;
      auto xp = x.row(p);
      for (std::size_t c = 0; c < m; ++c) xi[c] -= lpi * xp[c];
    }
    const double inv = 1.0 / lower_(ii, ii);
    for (double& v : xi) v *= inv;
  }
  return x;
}

Matrix solve_spd(const Matrix& k, const Matrix& b) {
  return Cholesky(k).solve(b);
}

Matrix orthonormalize_columns(const Matrix& a) {
  Matrix q = a;
  const std::size_t cols = q.cols();
  if (cols > q.rows()) {
    throw ParameterError("orthonormalize: more columns than rows");
  }
  for (std::size_t j = 0; j < cols; ++j) {
    const double original = column_norm(q, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        const double proj = column_dot(q, p, q, j);
        for (std::size_t r = 0; r < q.rows(); ++r) q(r, j) -= proj * q(r, p);
      }
    }
    const double nrm = column_norm(q, j);
    if (nrm <= 1e-12 * std::max(original, 1e-300) || nrm == 0.0) {
      complete_column(q, j);
    } else {
      for (std::size_t r = 0; r < q.rows(); ++r) q(r, j) /= nrm;
    }
  }
  return q;
}

Svd jacobi_svd(const Matrix& a) {
  if (a.rows() < a.cols()) {
    Svd t = jacobi_svd(a.transpose());
    Svd out{std::move(t.v), std::move(t.s), std::move(t.u)};
    // Re-apply the sign convention to the new U.
    for (std::size_t j = 0; j < out.s.size(); ++j) {
      std::size_t arg = 0;
      for (std::size_t r = 1; r < out.u.rows(); ++r)
        if (std::abs(out.u(r, j)) > std::abs(out.u(arg, j))) arg = r;
      if (out.u(arg, j) < 0.0) {
        for (std::size_t r = 0; r < out.u.rows(); ++r) out.u(r, j) = -out.u(r, j);
        for (std::size_t r = 0; r < out.v.rows(); ++r) out.v(r, j) = -out.v(r, j);
      }
    }
    return out;
  }
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  Matrix w = a;
  Matrix v = Matrix::identity(m);

  constexpr int kMaxSweeps = 80;
  constexpr double kTol = 1e-15;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double alpha = column_dot(w, p, w, p);
        const double beta = column_dot(w, q, w, q);
        const double gamma = column_dot(w, p, w, q);
        if (gamma == 0.0 || std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < n; ++r) {
          const double wp = w(r, p);
          const double wq = w(r, q);
          w(r, p) = c * wp - s * wq;
          w(r, q) = s * wp + c * wq;
        }
        for (std::size_t r = 0; r < m; ++r) {
          const double vp = v(r, p);
          const double vq = v(r, q);
          v(r, p) = c * vp - s * vq;
          v(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sv(m);
  for (std::size_t j = 0; j < m; ++j) sv[j] = column_norm(w, j);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

  Svd out{Matrix(n, m), std::vector<double>(m), Matrix(m, m)};
  const double smax = order.empty() ? 0.0 : sv[order.front()];
  const double cutoff = smax * 1e-14 * static_cast<double>(std::max(n, m));
  std::vector<std::size_t> incomplete;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t src = order[j];
    out.s[j] = sv[src];
    for (std::size_t r = 0; r < m; ++r) out.v(r, j) = v(r, src);
    if (sv[src] > cutoff && sv[src] > 0.0) {
      for (std::size_t r = 0; r < n; ++r) out.u(r, j) = w(r, src) / sv[src];
    } else {
      out.s[j] = sv[src] <= cutoff ? 0.0 : sv[src];
      incomplete.push_back(j);
    }
  }
  std::vector<bool> ready(m, true);
  for (std::size_t j : incomplete) ready[j] = false;
  for (std::size_t j : incomplete) {
    std::vector<std::size_t> have;
    for (std::size_t c = 0; c < m; ++c)
      if (ready[c]) have.push_back(c);
    Matrix basis(n, have.size() + 1);
    for (std::size_t c = 0; c < have.size(); ++c)
      for (std::size_t r = 0; r < n; ++r) basis(r, c) = out.u(r, have[c]);
    complete_column(basis, have.size());
    for (std::size_t r = 0; r < n; ++r) out.u(r, j) = basis(r, have.size());
    ready[j] = true;
  }

  for (std::size_t j = 0; j < m; ++j) {
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(out.u(r, j)) > std::abs(out.u(arg, j))) arg = r;
    if (out.u(arg, j) < 0.0) {
      for (std::size_t r = 0; r < n; ++r) out.u(r, j) = -out.u(r, j);
      for (std::size_t r = 0; r < m; ++r) out.v(r, j) = -out.v(r, j);
    }
  }
  return out;
}

Svd truncated_svd(const Matrix& m, std::size_t k, std::size_t power_iters,
                  std::uint64_t seed) {
  const std::size_t n = m.rows();
  const std::size_t d = m.cols();
  const std::size_t limit = std::min(n, d);
  if (k < 1 || k > limit) {
    throw ParameterError("truncated_svd: rank " + std::to_string(k) +
                         " outside [1, " + std::to_string(limit) + "]");
  }
  const std::size_t width = std::min(k + kOversample, limit);

  Rng rng(seed);
  const Matrix omega = gaussian_matrix(d, width, rng);
  Matrix q = orthonormalize_columns(matmul(m, omega));
  for (std::size_t it = 0; it < power_iters; ++it) {
    const Matrix z = orthonormalize_columns(matmul_tn(m, q));
    q = orthonormalize_columns(matmul(m, z));
  }
  const Matrix b = matmul_tn(q, m);  // width x d
  Svd small = jacobi_svd(b);

  Svd out{Matrix(n, k), std::vector<double>(small.s.begin(), small.s.begin() + k),
          small.v.col_block(0, k)};
  out.u = matmul(q, small.u.col_block(0, k));
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(out.u(r, j)) > std::abs(out.u(arg, j))) arg = r;
    if (out.u(arg, j) < 0.0) {
      for (std::size_t r = 0; r < n; ++r) out.u(r, j) = -out.u(r, j);
      for (std::size_t r = 0; r < d; ++r) out.v(r, j) = -out.v(r, j);
    }
  }
  return out;
}

Matrix pca_project(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw ParameterError("pca_project: need at least 2 rows");
  if (k < 1 || k > d) {
    throw ParameterError("pca_project: k = " + std::to_string(k) +
                         " outside [1, " + std::to_string(d) + "]");
  }
  Matrix centered = x;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered(i, j) -= mean;
  }
  Svd svd = jacobi_svd(centered);
  Matrix out(n, k);
  const std::size_t avail = std::min(k, svd.s.size());
  for (std::size_t j = 0; j < avail; ++j) {
    if (svd.s[j] == 0.0) continue;  // zero variance: projection stays zero
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += centered(i, c) * svd.v(c, j);
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace rlab

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
#include <cstdint>
#include <span>
#include <vector>

#include "readout_lab/matrix.hpp"

namespace rlab {

/// Euclidean projection onto the probability simplex (sort-based).
std::vector<double> project_to_simplex(std::span<const double> v);

struct HullDistance {
  double distance = 0.0;
  /// Length C; entry c is 0 and the rest form a simplex vector.
  std::vector<double> weights;
  /// ||w - proj(w - grad / L)|| at the returned weights.
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
};

/// Distance from prototype `c` (a row of P) to the convex hull of the other
/// rows, by accelerated projected gradient with restarts. Throws
/// ParameterError for fewer than two rows and ConvergenceError when the KKT
/// residual is still above 1e-8 after 10,000 iterations.
HullDistance hull_distance(const Matrix& prototypes, std::size_t c);

/// Largest observed <z, p_c> - max_{c' != c} <z, p_c'> over `trials` queries
/// drawn uniformly from the ball of radius R.
double eps_inclusion_margin(const Matrix& prototypes, std::size_t c,
                            double radius, std::size_t trials,
                            std::uint64_t seed);

/// Indices of the 2-D convex hull vertices in counter-clockwise order,
/// starting from the lowest-x point. Collinear boundary points are dropped,
/// so a collinear point set yields its two extreme points.
std::vector<std::size_t> convex_hull_2d(const Matrix& points);

/// Mean of ||p_i - p_j|| over unordered pairs.
double mean_pairwise_distance(const Matrix& prototypes);

struct ClassHull {
  double d_ch = 0.0;
  double d_ch_norm = 0.0;
  std::vector<double> weights;
  bool interior = false;
};

struct HullReport {
  std::vector<ClassHull> classes;
  double mean_pairwise_distance = 0.0;
  Matrix pca;  // C x 2
  std::vector<std::size_t> hull_vertices;
};

/// Convex-hull audit of a prototype set: full-dimensional hull distances,
/// their normalization by the mean pairwise distance, a 2-D PCA hull, and a
/// flag on every class whose distance is below the smallest distance among
/// the hull vertices by more than 1e-7 times the mean pairwise distance. Throws DegeneracyError when all prototypes coincide.
HullReport flag_interior(const Matrix& prototypes);

}  // namespace rlab

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
#include <span>
#include <utility>
#include <vector>

#include "readout_lab/linalg.hpp"
#include "readout_lab/matrix.hpp"

namespace rlab {

/// Synthetic embedding clouds used by the experiments and the training demo.
struct LabeledPoints {
  Matrix x;
  std::vector<std::size_t> labels;
  /// Rows sharing a group id must land on the same side of a support/query
  /// split (mirror pairs in the bimodal cloud). Singleton groups otherwise.
  std::vector<std::size_t> groups;
};

/// Uniformly random unit vector in R^d.
std::vector<double> random_unit_vector(std::size_t d, Rng& rng);

/// Two balanced unit-variance clusters centred at -(margin/2) u (label 0)
/// and +(margin/2) u (label 1).
LabeledPoints translation_clusters(std::size_t n, std::size_t d, double margin,
                                   std::span<const double> u, Rng& rng);

/// x + t u on every row.
Matrix translate_rows(const Matrix& x, std::span<const double> u, double t);

struct BimodalOptions {
  std::size_t d = 64;
  std::size_t n_bc = 100;   // samples in each of B and C
  std::size_t n_mode = 50;  // samples in each of A's two modes
  double noise = 1.0;
};

/// Labels A = 0, B = 1, C = 2. B sits at -delta e1, C at +delta e1 and A's
/// modes at +-delta e2. Samples come in mirror pairs (x1, x_rest) and
/// (x1, -x_rest), so every class mean lies exactly on the e1 axis whenever
/// pairs are kept together; `groups` records the pairing.
LabeledPoints bimodal_points(double delta, const BimodalOptions& options, Rng& rng);

/// Class-balanced split with every group kept whole: for each class, half of
/// its groups (rounded down) go to the support set. Returns support indices
/// then query indices, each ordered by row.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const LabeledPoints& points, std::uint64_t seed);

struct ClusterOptions {
  std::size_t n = 500;
  std::size_t classes = 5;
  std::size_t d = 64;
  double noise = 1.0;
};

/// Class means `spread` times random unit vectors, then the whole cloud
/// moved by `shift_factor` times the mean pairwise distance of the means
/// along a random direction.
LabeledPoints origin_shifted_clusters(const ClusterOptions& options, double spread,
                                      double shift_factor, Rng& rng);

/// Class c centred at r_c u_c with r linearly spaced over [r_min, r_max] and
/// u_c random unit vectors.
LabeledPoints varying_radius_clusters(const ClusterOptions& options, double r_min,
                                      double r_max, Rng& rng);

}  // namespace rlab

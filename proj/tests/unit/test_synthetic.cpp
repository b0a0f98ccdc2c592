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
#include <set>

#include "doctest.h"
#include "readout_lab/errors.hpp"
#include "readout_lab/geometry.hpp"
#include "readout_lab/readouts.hpp"
#include "readout_lab/synthetic.hpp"

using rlab::Matrix;

namespace {

Matrix class_means(const Matrix& x, const std::vector<std::size_t>& labels,
                   const std::vector<std::size_t>& rows, std::size_t classes) {
  std::vector<std::size_t> sub;
  for (std::size_t r : rows) sub.push_back(labels[r]);
  return rlab::fit_prototypes(x.select_rows(rows), rlab::one_hot(sub, classes)).prototypes;
}

}  // namespace

TEST_CASE("bimodal cloud: counts, pairing and on-axis class means") {
  rlab::Rng rng(3);
  rlab::BimodalOptions opt;
  const auto pts = rlab::bimodal_points(2.0, opt, rng);
  REQUIRE(pts.x.rows() == 300);
  CHECK(pts.x.cols() == 64);
  std::array<int, 3> counts{};
  for (auto y : pts.labels) ++counts[y];
  CHECK(counts == std::array<int, 3>{100, 100, 100});

  // A's pairs straddle the two modes.
  int upper = 0;
  for (std::size_t i = 0; i < 100; ++i) upper += pts.x(i, 1) > 0.0;
  CHECK(std::abs(upper - 50) <= 10);

  const auto [support, query] = rlab::stratified_split(pts, 7);
  CHECK(support.size() == 150);
  CHECK(query.size() == 150);
  std::set<std::size_t> sgroups;
  for (auto r : support) sgroups.insert(pts.groups[r]);
  for (auto r : query) CHECK(sgroups.count(pts.groups[r]) == 0);

  for (const auto* rows : {&support, &query}) {
    const Matrix p = class_means(pts.x, pts.labels, *rows, 3);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t j = 1; j < 64; ++j) CHECK(std::abs(p(c, j)) <= 1e-14);
    CHECK(p(1, 0) < p(0, 0));
    CHECK(p(0, 0) < p(2, 0));
    CHECK(rlab::hull_distance(p, 0).distance <= 1e-7);
  }
}

TEST_CASE("bimodal cloud rejects bad options") {
  rlab::Rng rng(1);
  rlab::BimodalOptions opt;
  opt.n_bc = 99;
  CHECK_THROWS_AS(rlab::bimodal_points(1.0, opt, rng), rlab::ParameterError);
  CHECK_THROWS_AS(rlab::bimodal_points(-1.0, rlab::BimodalOptions{}, rng), rlab::ParameterError);
}

TEST_CASE("translation clusters sit at +-margin/2 along u") {
  rlab::Rng rng(5);
  const auto u = rlab::random_unit_vector(64, rng);
  CHECK(rlab::norm2(u) == doctest::Approx(1.0).epsilon(1e-14));
  const auto pts = rlab::translation_clusters(800, 64, 6.0, u, rng);
  std::vector<std::size_t> all(800);
  for (std::size_t i = 0; i < 800; ++i) all[i] = i;
  const Matrix p = class_means(pts.x, pts.labels, all, 2);
  // Each mean has 400 unit-variance draws: along-axis error ~ 0.05.
  CHECK(rlab::dot(p.row(0), u) == doctest::Approx(-3.0).epsilon(0.08));
  CHECK(rlab::dot(p.row(1), u) == doctest::Approx(3.0).epsilon(0.08));

  const Matrix moved = rlab::translate_rows(pts.x, u, 2.5);
  for (std::size_t j = 0; j < 64; ++j)
    CHECK(moved(10, j) == doctest::Approx(pts.x(10, j) + 2.5 * u[j]));
}

TEST_CASE("calibration geometries") {
  rlab::ClusterOptions opt;
  opt.noise = 0.0;
  rlab::Rng rng(9);
  const auto vr = rlab::varying_radius_clusters(opt, 1.0, 5.0, rng);
  CHECK(vr.x.rows() == 500);
  for (std::size_t c = 0; c < 5; ++c)
    CHECK(rlab::norm2(vr.x.row(c * 100)) == doctest::Approx(1.0 + static_cast<double>(c)));

  const auto os = rlab::origin_shifted_clusters(opt, 2.0, 10.0, rng);
  std::vector<std::size_t> all(500);
  for (std::size_t i = 0; i < 500; ++i) all[i] = i;
  const Matrix p = class_means(os.x, os.labels, all, 5);
  double centroid_norm = 0.0;
  std::vector<double> centroid(64, 0.0);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t j = 0; j < 64; ++j) centroid[j] += p(c, j) / 5.0;
  centroid_norm = rlab::norm2(centroid);
  CHECK(centroid_norm > 5.0 * rlab::mean_pairwise_distance(p));

  opt.n = 501;
  CHECK_THROWS_AS(rlab::varying_radius_clusters(opt, 1.0, 5.0, rng), rlab::ParameterError);
}

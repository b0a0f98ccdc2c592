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
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "readout_lab/errors.hpp"
#include "readout_lab/experiments.hpp"

namespace {

std::string csv(const rlab::SweepResult& r) {
  std::ostringstream out;
  rlab::write_sweep_csv(out, r);
  return out.str();
}

}  // namespace

TEST_CASE("worked examples all pass") {
  const auto checks = rlab::run_worked_examples();
  CHECK(checks.size() >= 20);
  for (const auto& c : checks) {
    INFO(c.example << " / " << c.quantity << ": expected " << c.expected << ", got " << c.actual);
    CHECK(c.pass);
  }
  std::ostringstream out;
  rlab::write_worked_csv(out, checks);
  CHECK(out.str().rfind("example,quantity,expected,actual,pass\n", 0) == 0);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(100, 0);
  rlab::parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(rlab::parallel_for(10, 3,
                                     [](std::size_t i) {
                                       if (i == 7) throw std::runtime_error("seven");
                                     }),
                  std::runtime_error);
  CHECK_THROWS_AS(rlab::parallel_for(3, 0, [](std::size_t) {}), rlab::ParameterError);
}

TEST_CASE("translation sweep: small run, shape and job invariance") {
  rlab::TranslationConfig cfg;
  cfg.n = 200;
  cfg.d = 16;
  cfg.n_seeds = 3;
  cfg.t_grid = {0.0, 5.0};
  const auto a = rlab::run_translation_sweep(cfg);
  cfg.jobs = 3;
  const auto b = rlab::run_translation_sweep(cfg);
  CHECK(csv(a) == csv(b));
  CHECK(a.mean.rows() == 2);
  CHECK(csv(a).rfind("t,proto_acc_mean,proto_acc_std,ridge_acc_mean,ridge_acc_std,n_seeds\n", 0) ==
        0);
  const auto proto = a.column("proto_acc");
  const auto ridge = a.column("ridge_acc");
  CHECK(a.mean(0, proto) >= 0.95);
  CHECK(a.mean(1, proto) < a.mean(0, proto));
  CHECK(a.mean(1, ridge) >= 0.95);
  CHECK_THROWS_AS(a.column("missing"), rlab::ParameterError);
  cfg.t_grid.clear();
  CHECK_THROWS_AS(rlab::run_translation_sweep(cfg), rlab::ParameterError);
}

TEST_CASE("bimodal sweep: dominated instances never predict A") {
  rlab::BimodalConfig cfg;
  cfg.points.d = 8;
  cfg.n_seeds = 4;
  cfg.delta_grid = {0.0, 2.0, 4.0};
  const auto r = rlab::run_bimodal_sweep(cfg);
  const auto dom = r.column("dominated");
  const auto recall = r.column("proto_recall_a");
  for (std::size_t v = 0; v < r.values.size(); ++v)
    for (std::size_t s = 0; s < r.seeds.size(); ++s)
      if (r.samples[v](s, dom) == 1.0) CHECK(r.samples[v](s, recall) == 0.0);
  const auto summary = rlab::summarize_bimodal(r);
  CHECK(summary.dominated_instances >= 8);
  CHECK(summary.dominated_proto_recall_a == 0.0);
  CHECK(summary.first_dominated_delta == 2.0);
  CHECK(r.mean(2, r.column("proto_acc")) == doctest::Approx(2.0 / 3.0).epsilon(0.02));
}

TEST_CASE("calibration suite: small run and outputs") {
  rlab::CalibrationConfig cfg;
  cfg.n_seeds = 2;
  cfg.clusters.n = 100;
  cfg.clusters.d = 16;
  const auto suite = rlab::run_calibration_suite(cfg);
  REQUIRE(suite.geometries.size() == 2);
  for (const auto& g : suite.geometries) {
    REQUIRE(g.methods.size() == 3);
    for (const auto& m : g.methods) {
      CHECK(m.bins.size() == 15);
      std::size_t count = 0;
      for (const auto& b : m.bins) count += b.count;
      CHECK(count == 2 * 50);
      CHECK(m.ece_mean >= 0.0);
      CHECK(m.ece_mean <= 1.0);
    }
    CHECK(g.methods[0].accuracy_mean == g.methods[1].accuracy_mean);
  }
  std::ostringstream a, b;
  rlab::write_calibration_csv(a, suite);
  rlab::write_reliability_csv(b, suite);
  CHECK(a.str().rfind("geometry,method,ece_mean,ece_std,acc_mean,n_seeds\n", 0) == 0);
  const std::string rel = b.str();
  CHECK(std::count(rel.begin(), rel.end(), '\n') == 1 + 2 * 3 * 15);
}

TEST_CASE("collapsed geometry: every class at one point") {
  rlab::CalibrationConfig cfg;
  cfg.n_seeds = 2;
  cfg.clusters.n = 200;
  cfg.clusters.d = 16;
  cfg.r_min = cfg.r_max = 0.0;
  const auto suite = rlab::run_calibration_suite(cfg);
  const auto& g = suite.geometries[1];
  for (const auto& m : g.methods) CHECK(m.accuracy_mean < 0.45);
}

TEST_CASE("spearman") {
  const std::vector<double> t{0, 1, 2, 3, 4};
  CHECK(rlab::spearman(t, std::vector<double>{9, 7, 5, 3, 1}) == doctest::Approx(-1.0));
  CHECK(rlab::spearman(t, std::vector<double>{1, 4, 9, 16, 100}) == doctest::Approx(1.0));
  // Ties take average ranks: y ranks (0.5, 0.5, 2, 3, 4).
  CHECK(rlab::spearman(t, std::vector<double>{1, 1, 2, 3, 4}) ==
        doctest::Approx(0.9746794344808963));
  CHECK(std::isnan(rlab::spearman(t, std::vector<double>(5, 2.0))));
  CHECK_THROWS_AS(rlab::spearman(t, std::vector<double>{1}), rlab::ParameterError);
}

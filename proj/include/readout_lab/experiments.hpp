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
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "readout_lab/calibration.hpp"
#include "readout_lab/matrix.hpp"
#include "readout_lab/synthetic.hpp"

namespace rlab {

/// Runs fn(0..n-1) on up to `jobs` threads. Each index must write only its
/// own output slot. The first exception thrown (lowest index) is rethrown.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn);

/// Rank correlation with average ranks for ties. NaN when either sample is
/// constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// derive_seed(base, i) for i < count.
std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count);

struct SweepResult {
  std::string variable;
  std::vector<double> values;
  std::vector<std::string> columns;
  std::vector<std::uint64_t> seeds;
  std::vector<Matrix> samples;  // per value: seeds x columns
  Matrix mean;                  // values x columns
  Matrix stddev;                // sample standard deviation over seeds

  std::size_t column(std::string_view name) const;
  /// Fills mean and stddev from samples.
  void aggregate();
};

/// Header: variable, then <col>_mean,<col>_std per column, then n_seeds.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

struct TranslationConfig {
  std::size_t n = 800;
  std::size_t d = 64;
  double margin = 6.0;
  std::vector<double> t_grid{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  double lambda = 10.0;
  std::uint64_t seed = 0;
  std::size_t n_seeds = 20;
  std::size_t jobs = 1;
};

/// Columns proto_acc, ridge_acc. Each seed draws one cloud and one 50/50
/// split and evaluates every t on translated copies of it.
SweepResult run_translation_sweep(const TranslationConfig& config);

std::vector<double> default_delta_grid();

struct BimodalConfig {
  BimodalOptions points;
  /// 0, 0.25, ..., 5.
  std::vector<double> delta_grid = default_delta_grid();
  double lambda = 10.0;
  double dominance_tol = 1e-7;
  std::uint64_t seed = 0;
  std::size_t n_seeds = 20;
  std::size_t jobs = 1;
};

/// Columns d_ch_a, dominated (1 when d_ch_a <= dominance_tol), per-class
/// prototype and ridge recall, and both overall accuracies.
SweepResult run_bimodal_sweep(const BimodalConfig& config);

struct BimodalSummary {
  std::size_t dominated_instances = 0;
  /// Means over (delta, seed) instances in the dominated regime.
  double dominated_proto_recall_a = 0.0;
  double dominated_proto_acc = 0.0;
  double dominated_ridge_recall_a = 0.0;
  /// Smallest per-delta mean ridge recall of A and where it occurs.
  double min_ridge_recall_a = 0.0;
  double min_ridge_recall_a_delta = 0.0;
  /// First grid value where the mean prototype recall of A is 0 and where
  /// every seed is dominated; NaN when never reached.
  double first_zero_recall_delta = 0.0;
  double first_dominated_delta = 0.0;
};

BimodalSummary summarize_bimodal(const SweepResult& sweep);

struct CalibrationConfig {
  ClusterOptions clusters{500, 5, 64, 0.7};
  double spread = 2.0;        // origin-shifted: norm of each class mean
  double shift_factor = 10.0; // times the mean pairwise class distance
  double r_min = 1.0;
  double r_max = 5.0;
  double logistic_lambda = 1e-3;
  std::size_t n_bins = 15;
  std::uint64_t seed = 0;
  std::size_t n_seeds = 20;
  std::size_t jobs = 1;
};

struct MethodCalibration {
  std::string method;  // prototype, temperature, logistic
  double ece_mean = 0.0;
  double ece_std = 0.0;
  double accuracy_mean = 0.0;
  /// Reliability table pooled over all seeds' query predictions.
  std::vector<ReliabilityBin> bins;
};

struct GeometryCalibration {
  std::string geometry;  // origin-shifted, varying-radius
  std::vector<MethodCalibration> methods;
  double temperature_mean = 0.0;
};

struct CalibrationSuite {
  std::vector<GeometryCalibration> geometries;
  std::vector<std::uint64_t> seeds;
};

/// Per seed: draw the geometry, split 50/50 by class, fit prototypes (and
/// the temperature on the support prototype logits) and a logistic head on
/// the support set, score the query set.
CalibrationSuite run_calibration_suite(const CalibrationConfig& config);

/// geometry,method,ece_mean,ece_std,acc_mean,n_seeds
void write_calibration_csv(std::ostream& out, const CalibrationSuite& suite);
/// geometry,method,bin,lower,upper,confidence,accuracy,count
void write_reliability_csv(std::ostream& out, const CalibrationSuite& suite);

struct WorkedCheck {
  std::string example;
  std::string quantity;
  std::string expected;
  std::string actual;
  bool pass = false;
};

/// The two handcrafted examples (1-D translation, 2-D multimodal inclusion).
std::vector<WorkedCheck> run_worked_examples();

/// example,quantity,expected,actual,pass
void write_worked_csv(std::ostream& out, const std::vector<WorkedCheck>& checks);

}  // namespace rlab

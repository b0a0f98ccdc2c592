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

#include "readout_lab/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "readout_lab/errors.hpp"

namespace rlab {
namespace {

constexpr double kLowerT = 1e-2;
constexpr double kUpperT = 1e2;
constexpr double kBracket = 1e-4;

void check_labels(const Matrix& m, const std::vector<std::size_t>& labels,
                  const char* who) {
  if (labels.size() != m.rows()) {
    throw ValidationError(std::string(who) + ": label count does not match rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= m.cols()) {
      throw ValidationError(std::string(who) + ": label out of range at row " +
                            std::to_string(i));
    }
  }
}

}  // namespace

CalibrationReport ece(const Matrix& probs, const std::vector<std::size_t>& labels,
                      std::size_t n_bins) {
  if (n_bins == 0) throw ParameterError("ece: n_bins must be positive");
  if (probs.rows() == 0) throw ValidationError("ece: no samples");
  check_labels(probs, labels, "ece");

  CalibrationReport report;
  report.n_bins = n_bins;
  report.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<double> hit_sum(n_bins, 0.0);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    double total = 0.0;
    for (double p : row) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw ValidationError("ece: invalid probability in row " + std::to_string(i));
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw ValidationError("ece: row " + std::to_string(i) + " does not sum to 1");
    }
    const std::size_t pred = argmax(row);
    const double conf = row[pred];
    const std::size_t b = std::min(
        static_cast<std::size_t>(std::floor(conf * static_cast<double>(n_bins))), n_bins - 1);
    conf_sum[b] += conf;
    hit_sum[b] += pred == labels[i] ? 1.0 : 0.0;
    ++report.bins[b].count;
  }
  const double n = static_cast<double>(probs.rows());
  for (std::size_t b = 0; b < n_bins; ++b) {
    ReliabilityBin& bin = report.bins[b];
    bin.lower = static_cast<double>(b) / static_cast<double>(n_bins);
    bin.upper = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    if (bin.count == 0) continue;
    const double c = static_cast<double>(bin.count);
    bin.confidence = conf_sum[b] / c;
    bin.accuracy = hit_sum[b] / c;
    report.ece += (c / n) * std::abs(bin.accuracy - bin.confidence);
  }
  return report;
}

double temperature_nll(const Matrix& logits, const std::vector<std::size_t>& labels,
                       double temperature) {
  Matrix scaled = logits;
  scaled *= 1.0 / temperature;
  const Matrix lp = log_softmax_rows(scaled);
  double total = 0.0;
  for (std::size_t i = 0; i < lp.rows(); ++i) total -= lp(i, labels[i]);
  return total / static_cast<double>(lp.rows());
}

Matrix temperature_softmax(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  Matrix scaled = logits;
  scaled *= 1.0 / temperature;
  return softmax_rows(scaled);
}

TemperatureFit temperature_fit(const Matrix& logits,
                               const std::vector<std::size_t>& labels) {
  if (logits.rows() < 2) throw ParameterError("temperature_fit: need at least 2 rows");
  check_labels(logits, labels, "temperature_fit");
  if (std::set<std::size_t>(labels.begin(), labels.end()).size() < 2) {
    throw ParameterError("temperature_fit: need at least two distinct labels");
  }

  bool constant = true;
  for (std::size_t i = 0; i < logits.rows() && constant; ++i) {
    const auto row = logits.row(i);
    for (double v : row) constant = constant && v == row[0];
  }
  if (constant) {
    return {kLowerT, temperature_nll(logits, labels, kLowerT), true};
  }

  auto f = [&](double u) { return temperature_nll(logits, labels, std::exp(u)); };
  double a = std::log(kLowerT);
  double b = std::log(kUpperT);
  const double fa = f(a);
  const double fb = f(b);
  if (!std::isfinite(fa) && !std::isfinite(fb)) {
    throw ConvergenceError("temperature_fit: NLL non-finite at both bracket ends",
                           std::numeric_limits<double>::infinity());
  }
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > kBracket) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double u = 0.5 * (a + b);
  TemperatureFit fit{std::exp(u), f(u), false};
  // The search cannot land exactly on a bracket end; prefer it if better.
  if (fa < fit.nll) fit = {kLowerT, fa, false};
  if (fb < fit.nll) fit = {kUpperT, fb, false};
  return fit;
}

}  // namespace rlab

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
#include <vector>

#include "readout_lab/matrix.hpp"

namespace rlab {

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  double confidence = 0.0;  // mean max-probability, 0 for empty bins
  double accuracy = 0.0;    // 0 for empty bins
  std::size_t count = 0;
};

struct CalibrationReport {
  std::size_t n_bins = 15;
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
  /// 1 unless the probabilities came from temperature-scaled logits.
  double temperature = 1.0;
  bool temperature_degenerate = false;
};

/// Expected calibration error over equal-width confidence bins [lo, hi);
/// a confidence of exactly 1 lands in the last bin. Throws ValidationError
/// when a row is not a probability vector (tolerance 1e-6) or a label is out
/// of range.
CalibrationReport ece(const Matrix& probs, const std::vector<std::size_t>& labels,
                      std::size_t n_bins = 15);

struct TemperatureFit {
  double temperature = 1.0;
  double nll = 0.0;
  /// Every logit row is constant, so the NLL does not depend on T.
  bool degenerate = false;
};

/// Mean cross-entropy of softmax(logits / T).
double temperature_nll(const Matrix& logits, const std::vector<std::size_t>& labels,
                       double temperature);

/// Golden-section search on log T over [1e-2, 1e2] down to a bracket of
/// width 1e-4. Degenerate inputs return T = 1e-2 with the flag set.
TemperatureFit temperature_fit(const Matrix& logits,
                               const std::vector<std::size_t>& labels);

/// softmax(logits / T).
Matrix temperature_softmax(const Matrix& logits, double temperature);

}  // namespace rlab

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
#include "readout_lab/tape.hpp"

namespace rlab {

/// Origin-anchored prototype head: class means scored by inner product.
struct PrototypeModel {
  Matrix prototypes;                      // C x d_z
  std::vector<std::size_t> class_counts;  // support rows per class
};

/// Bias-augmented ridge head solved in closed (dual) form.
struct FittedRidge {
  Matrix weights;             // d_z x C
  std::vector<double> bias;   // C
  double lambda = 0.0;
};

/// L2-regularized multinomial logistic head.
struct LogisticModel {
  Matrix weights;             // d_z x C
  std::vector<double> bias;   // C
  double lambda = 0.0;
  std::size_t iterations_used = 0;
  double gradient_norm = 0.0;
};

PrototypeModel fit_prototypes(const Matrix& z_support, const Matrix& y_support);
/// Entry (q, c) = <z_q, p_c>.
Matrix prototype_logits(const PrototypeModel& model, const Matrix& z_query);
Matrix prototype_softmax(const PrototypeModel& model, const Matrix& z_query);

/// [W; b^T] = Zs~^T (Zs~ Zs~^T + lambda I)^-1 Ys with Zs~ = [Zs | 1].
///
/// The bias column sits inside the regularized solve, so it is shrunk along
/// with the weights.
FittedRidge fit_ridge(const Matrix& z_support, const Matrix& y_support,
                      double lambda);
/// Zq W + 1 b^T.
Matrix ridge_logits(const FittedRidge& model, const Matrix& z_query);
/// Ridge fit and query logits recorded on a tape, so gradients reach both
/// embedding inputs through the solve.
Var ridge_logits_on_tape(Tape& tape, Var z_support, const Matrix& y_support,
                         Var z_query, double lambda);
/// Relative residual of the normal equations
/// (Zs~^T Zs~ + lambda I) [W; b^T] = Zs~^T Ys.
double ridge_normal_residual(const FittedRidge& model, const Matrix& z_support,
                             const Matrix& y_support);

struct LogisticOptions {
  double lambda = 1e-2;
  std::size_t max_iters = 2000;
  double tol = 1e-6;
};

/// Minimizes mean cross-entropy + (lambda / 2) ||W||_F^2 (bias unpenalized)
/// by full-batch gradient descent with Armijo backtracking. Throws
/// DivergenceError when the objective becomes non-finite.
LogisticModel fit_logistic(const Matrix& z_support, const Matrix& y_support,
                           const LogisticOptions& options = {});
Matrix logistic_logits(const LogisticModel& model, const Matrix& z_query);
Matrix logistic_probabilities(const LogisticModel& model, const Matrix& z_query);

/// Fraction of rows whose argmax (lowest-index ties) equals the label.
double accuracy(const Matrix& scores, const std::vector<std::size_t>& labels);
/// Per-class recall; classes absent from `labels` report 0.
std::vector<double> per_class_recall(const Matrix& scores,
                                     const std::vector<std::size_t>& labels,
                                     std::size_t classes);

}  // namespace rlab

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

#include "readout_lab/readouts.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "readout_lab/errors.hpp"
#include "readout_lab/linalg.hpp"

namespace rlab {
namespace {

void require_rows(const Matrix& z, const Matrix& y, const char* who) {
  if (z.rows() != y.rows()) {
    throw ParameterError(std::string(who) + ": " + std::to_string(z.rows()) +
                         " embedding rows but " + std::to_string(y.rows()) +
                         " label rows");
  }
  if (z.rows() == 0) throw ParameterError(std::string(who) + ": empty support");
}

void require_dim(std::size_t expected, const Matrix& z_query, const char* who) {
  if (z_query.cols() != expected) {
    throw ParameterError(std::string(who) + ": query dimension " +
                         std::to_string(z_query.cols()) + " does not match " +
                         std::to_string(expected));
  }
}

Matrix bias_row(const std::vector<double>& b) { return Matrix::row_vector(b); }

// Objective and gradient of the centered logistic problem.
struct LogisticState {
  double loss = 0.0;
  Matrix grad_w;
  std::vector<double> grad_b;
};

double logistic_loss(const Matrix& z, const Matrix& y, const Matrix& w,
                     const std::vector<double>& b, double lambda,
                     Matrix* probs_out) {
  Matrix logits = add_row_broadcast(matmul(z, w), bias_row(b));
  const Matrix logp = log_softmax_rows(logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) loss -= y(i, j) * logp(i, j);
  loss /= static_cast<double>(z.rows());
  double wn = 0.0;
  for (double v : w.data()) wn += v * v;
  loss += 0.5 * lambda * wn;
  if (probs_out != nullptr) {
    Matrix p = logp;
    for (double& v : p.data()) v = std::exp(v);
    *probs_out = std::move(p);
  }
  return loss;
}

LogisticState logistic_state(const Matrix& z, const Matrix& y, const Matrix& w,
                             const std::vector<double>& b, double lambda) {
  LogisticState s;
  Matrix probs;
  s.loss = logistic_loss(z, y, w, b, lambda, &probs);
  probs -= y;
  probs *= 1.0 / static_cast<double>(z.rows());
  s.grad_w = matmul_tn(z, probs);
  s.grad_w += lambda * w;
  s.grad_b.assign(y.cols(), 0.0);
  for (std::size_t i = 0; i < probs.rows(); ++i)
    for (std::size_t j = 0; j < probs.cols(); ++j) s.grad_b[j] += probs(i, j);
  return s;
}

double state_grad_norm(const LogisticState& s) {
  double g = 0.0;
  for (double v : s.grad_w.data()) g += v * v;
  for (double v : s.grad_b) g += v * v;
  return std::sqrt(g);
}

}  // namespace

PrototypeModel fit_prototypes(const Matrix& z_support, const Matrix& y_support) {
  require_rows(z_support, y_support, "fit_prototypes");
  const auto labels = labels_from_one_hot(y_support);
  const std::size_t classes = y_support.cols();
  PrototypeModel model{Matrix(classes, z_support.cols()),
                       std::vector<std::size_t>(classes, 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto dst = model.prototypes.row(labels[i]);
    auto src = z_support.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    ++model.class_counts[labels[i]];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (model.class_counts[c] == 0) {
      throw ValidationError("class without support: " + std::to_string(c));
    }
    const double inv = 1.0 / static_cast<double>(model.class_counts[c]);
    for (double& v : model.prototypes.row(c)) v *= inv;
  }
  return model;
}

Matrix prototype_logits(const PrototypeModel& model, const Matrix& z_query) {
  require_dim(model.prototypes.cols(), z_query, "prototype_logits");
  return matmul_nt(z_query, model.prototypes);
}

Matrix prototype_softmax(const PrototypeModel& model, const Matrix& z_query) {
  return softmax_rows(prototype_logits(model, z_query));
}

FittedRidge fit_ridge(const Matrix& z_support, const Matrix& y_support,
                      double lambda) {
  require_rows(z_support, y_support, "fit_ridge");
  if (!(lambda > 0.0)) {
    throw ParameterError("fit_ridge: lambda must be positive");
  }
  const Matrix aug = append_ones_column(z_support);
  Matrix gram = matmul_nt(aug, aug);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += lambda;
  const Matrix dual = solve_spd(gram, y_support);
  const Matrix stacked = matmul_tn(aug, dual);  // (d_z + 1) x C

  const std::size_t d = z_support.cols();
  FittedRidge model{Matrix(d, y_support.cols()),
                    std::vector<double>(y_support.cols()), lambda};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t c = 0; c < y_support.cols(); ++c)
      model.weights(i, c) = stacked(i, c);
  for (std::size_t c = 0; c < y_support.cols(); ++c) model.bias[c] = stacked(d, c);
  return model;
}

Matrix ridge_logits(const FittedRidge& model, const Matrix& z_query) {
  require_dim(model.weights.rows(), z_query, "ridge_logits");
  return add_row_broadcast(matmul(z_query, model.weights), bias_row(model.bias));
}

Var ridge_logits_on_tape(Tape& tape, Var z_support, const Matrix& y_support,
                         Var z_query, double lambda) {
  require_rows(tape.value(z_support), y_support, "ridge_logits_on_tape");
  require_dim(tape.value(z_support).cols(), tape.value(z_query),
              "ridge_logits_on_tape");
  if (!(lambda > 0.0)) {
    throw ParameterError("ridge_logits_on_tape: lambda must be positive");
  }
  const Var aug = tape.append_ones(z_support);
  Matrix ridge = Matrix::identity(y_support.rows());
  ridge *= lambda;
  const Var gram = tape.add(tape.matmul(aug, aug, false, true), tape.leaf(std::move(ridge)));
  const Var dual = tape.solve_spd(gram, tape.leaf(y_support));
  const Var stacked = tape.matmul(aug, dual, true, false);
  return tape.matmul(tape.append_ones(z_query), stacked);
}

double ridge_normal_residual(const FittedRidge& model, const Matrix& z_support,
                             const Matrix& y_support) {
  const Matrix aug = append_ones_column(z_support);
  const std::size_t d = model.weights.rows();
  Matrix stacked(d + 1, model.weights.cols());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t c = 0; c < stacked.cols(); ++c)
      stacked(i, c) = model.weights(i, c);
  for (std::size_t c = 0; c < stacked.cols(); ++c) stacked(d, c) = model.bias[c];
  Matrix lhs = matmul_tn(aug, matmul(aug, stacked));
  lhs += model.lambda * stacked;
  const Matrix rhs = matmul_tn(aug, y_support);
  const double denom = frobenius_norm(rhs);
  return frobenius_norm(lhs - rhs) / (denom > 0.0 ? denom : 1.0);
}

LogisticModel fit_logistic(const Matrix& z_support, const Matrix& y_support,
                           const LogisticOptions& options) {
  require_rows(z_support, y_support, "fit_logistic");
  labels_from_one_hot(y_support);
  if (!(options.lambda >= 0.0)) {
    throw ParameterError("fit_logistic: lambda must be non-negative");
  }
  const std::size_t n = z_support.rows();
  const std::size_t d = z_support.cols();
  const std::size_t classes = y_support.cols();

  // The bias is unpenalized, so centering the features is an exact
  // reparametrization; it decouples W from b and speeds up descent.
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += z_support(i, j);
  for (double& m : mean) m /= static_cast<double>(n);
  Matrix z = z_support;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) z(i, j) -= mean[j];

  Matrix w(d, classes);
  std::vector<double> b(classes, 0.0);
  LogisticState state = logistic_state(z, y_support, w, b, options.lambda);
  double step = 1.0;
  std::size_t iter = 0;
  double gnorm = state_grad_norm(state);
  Matrix prev_w;
  std::vector<double> prev_b;
  LogisticState prev_state;
  constexpr double kArmijo = 1e-4;

  while (iter < options.max_iters && gnorm > options.tol) {
    if (!std::isfinite(state.loss)) {
      throw DivergenceError("fit_logistic: non-finite loss at iteration " +
                            std::to_string(iter));
    }
    if (iter > 0) {
      // Barzilai-Borwein trial step from the last displacement.
      double sy = 0.0;
      double ss = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double s = w.data()[i] - prev_w.data()[i];
        const double yv = state.grad_w.data()[i] - prev_state.grad_w.data()[i];
        sy += s * yv;
        ss += s * s;
      }
      for (std::size_t j = 0; j < classes; ++j) {
        const double s = b[j] - prev_b[j];
        const double yv = state.grad_b[j] - prev_state.grad_b[j];
        sy += s * yv;
        ss += s * s;
      }
      step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : step * 2.0;
    }
    const double g2 = gnorm * gnorm;
    Matrix next_w;
    std::vector<double> next_b(classes);
    double next_loss = 0.0;
    for (int backtracks = 0;; ++backtracks) {
      next_w = w;
      for (std::size_t i = 0; i < w.size(); ++i)
        next_w.data()[i] -= step * state.grad_w.data()[i];
      for (std::size_t j = 0; j < classes; ++j)
        next_b[j] = b[j] - step * state.grad_b[j];
      next_loss =
          logistic_loss(z, y_support, next_w, next_b, options.lambda, nullptr);
      if (std::isfinite(next_loss) &&
          next_loss <= state.loss - kArmijo * step * g2) {
        break;
      }
      if (backtracks > 60) {
        if (!std::isfinite(next_loss)) {
          throw DivergenceError("fit_logistic: non-finite loss at iteration " +
                                std::to_string(iter));
        }
        break;
      }
      step *= 0.5;
    }
    prev_w = std::move(w);
    prev_b = std::move(b);
    prev_state = std::move(state);
    w = std::move(next_w);
    b = std::move(next_b);
    state = logistic_state(z, y_support, w, b, options.lambda);
    gnorm = state_grad_norm(state);
    ++iter;
  }
  if (!std::isfinite(state.loss)) {
    throw DivergenceError("fit_logistic: non-finite loss");
  }

  LogisticModel model{w, b, options.lambda, iter, gnorm};
  // Undo the centering: logits = (z - mean) W + b = z W + (b - mean^T W).
  for (std::size_t c = 0; c < classes; ++c) {
    double shift = 0.0;
    for (std::size_t j = 0; j < d; ++j) shift += mean[j] * w(j, c);
    model.bias[c] -= shift;
  }
  return model;
}

Matrix logistic_logits(const LogisticModel& model, const Matrix& z_query) {
  require_dim(model.weights.rows(), z_query, "logistic_logits");
  return add_row_broadcast(matmul(z_query, model.weights), bias_row(model.bias));
}

Matrix logistic_probabilities(const LogisticModel& model, const Matrix& z_query) {
  return softmax_rows(logistic_logits(model, z_query));
}

double accuracy(const Matrix& scores, const std::vector<std::size_t>& labels) {
  if (scores.rows() != labels.size()) {
    throw ParameterError("accuracy: row/label count mismatch");
  }
  if (labels.empty()) return 0.0;
  const auto pred = argmax_rows(scores);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::vector<double> per_class_recall(const Matrix& scores,
                                     const std::vector<std::size_t>& labels,
                                     std::size_t classes) {
  if (scores.rows() != labels.size()) {
    throw ParameterError("per_class_recall: row/label count mismatch");
  }
  const auto pred = argmax_rows(scores);
  std::vector<double> hit(classes, 0.0);
  std::vector<double> total(classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total.at(labels[i]) += 1.0;
    if (pred[i] == labels[i]) hit[labels[i]] += 1.0;
  }
  for (std::size_t c = 0; c < classes; ++c)
    hit[c] = total[c] > 0.0 ? hit[c] / total[c] : 0.0;
  return hit;
}

}  // namespace rlab

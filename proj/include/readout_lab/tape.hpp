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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "readout_lab/linalg.hpp"
#include "readout_lab/matrix.hpp"

namespace rlab {

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
  friend bool operator==(Var, Var) = default;
};

enum class TapeOp {
  Leaf,
  MatMul,
  Add,
  Scale,
  AppendOnes,
  Hadamard,
  Relu,
  SoftmaxCrossEntropy,
  PoolRows,
  HopAttention,
  SolveSpd,
};

/// Reverse-mode differentiation over a closed set of matrix operations.
///
/// Nodes are appended in execution order, so parents always precede their
/// children and backward() is a single reverse sweep. Gradients accumulate
/// additively. A Tape is single-writer; confine each instance to one thread.
class Tape {
 public:
  using RowGroups = std::vector<std::vector<std::size_t>>;

  /// Input, parameter or constant.
  Var leaf(Matrix value);

  /// op(a) * op(b) where op transposes when the flag is set.
  Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
  /// a + b; b may also be a 1 x cols row broadcast over the rows of a.
  Var add(Var a, Var b);
  Var scale(Var a, double s);
  /// [a | 1]
  Var append_ones(Var a);
  Var hadamard(Var a, Var b);
  Var relu(Var a);
  /// Mean over rows of -sum_c t_c log softmax(logits)_c with
  /// t = (1 - smoothing) * onehot + smoothing / C. Produces a 1 x 1 node.
  Var softmax_cross_entropy(Var logits, const Matrix& targets,
                            double smoothing);
  /// Output row i is the mean of input rows groups[i]. Singleton groups act
  /// as a row gather.
  Var pool_rows(Var a, RowGroups groups);
  /// Per-row attention over hops: scores s_k = <query, hop_k> / sqrt(h),
  /// weights softmax_k(s), output sum_k weight_k * hop_k.
  Var hop_attention(Var query, std::span<const Var> hops);
  /// Solves K X = B with K symmetric positive definite. Backward uses
  /// B_bar = K^-1 X_bar and K_bar = -B_bar X^T.
  Var solve_spd(Var k, Var b);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  /// Zero matrix until backward() has run.
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  TapeOp op(Var v) const { return nodes_.at(v.id).op; }
  std::span<const std::size_t> parents(Var v) const {
    return nodes_.at(v.id).parents;
  }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a 1 x 1 root; resets all gradients first.
  void backward(Var root);

 private:
  struct Node {
    TapeOp op = TapeOp::Leaf;
    std::vector<std::size_t> parents;
    Matrix value;
    Matrix grad;
    // Per-op cached forward data.
    std::vector<Matrix> cache;
    double scalar = 0.0;
    bool flag_a = false;
    bool flag_b = false;
    RowGroups groups;
    std::optional<Cholesky> factor;
  };

  Var push(Node node);
  void backward_node(std::size_t index);
  Matrix& grad_of(std::size_t index) { return nodes_[index].grad; }

  std::vector<Node> nodes_;
};

/// Builds a scalar program on a fresh tape from leaves holding `params`.
using TapeProgram = std::function<Var(Tape&, std::span<const Var>)>;

/// Max over all parameter entries of |analytic - central difference| /
/// max(1, |central difference|). Throws EvaluationError when the program
/// returns a non-finite value at any probe.
double grad_check(const TapeProgram& f, std::span<const Matrix> params,
                  double eps = 1e-5);

}  // namespace rlab

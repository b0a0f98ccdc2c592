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

#include "readout_lab/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "readout_lab/errors.hpp"

namespace rlab {

Var Tape::push(Node node) {
  node.grad = Matrix(node.value.rows(), node.value.cols());
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  Node n;
  n.op = TapeOp::MatMul;
  n.parents = {a.id, b.id};
  n.flag_a = transpose_a;
  n.flag_b = transpose_b;
  if (!transpose_a && !transpose_b) {
    n.value = rlab::matmul(va, vb);
  } else if (transpose_a && !transpose_b) {
    n.value = matmul_tn(va, vb);
  } else if (!transpose_a && transpose_b) {
    n.value = matmul_nt(va, vb);
  } else {
    n.value = rlab::matmul(va.transpose(), vb.transpose());
  }
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  Node n;
  n.op = TapeOp::Add;
  n.parents = {a.id, b.id};
  if (va.same_shape(vb)) {
    n.value = va + vb;
  } else {
    n.value = add_row_broadcast(va, vb);
    n.flag_b = true;
  }
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = TapeOp::Scale;
  n.parents = {a.id};
  n.scalar = s;
  n.value = s * value(a);
  return push(std::move(n));
}

Var Tape::append_ones(Var a) {
  Node n;
  n.op = TapeOp::AppendOnes;
  n.parents = {a.id};
  n.value = append_ones_column(value(a));
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  Node n;
  n.op = TapeOp::Hadamard;
  n.parents = {a.id, b.id};
  n.value = rlab::hadamard(value(a), value(b));
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = TapeOp::Relu;
  n.parents = {a.id};
  n.value = value(a);
  for (double& v : n.value.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Var Tape::softmax_cross_entropy(Var logits, const Matrix& targets,
                                double smoothing) {
  const Matrix& x = value(logits);
  if (!x.same_shape(targets)) {
    throw ParameterError("softmax_cross_entropy: targets shape mismatch");
  }
  if (x.rows() == 0) throw ParameterError("softmax_cross_entropy: no rows");
  if (smoothing < 0.0 || smoothing >= 1.0) {
    throw ParameterError("label smoothing must lie in [0, 1)");
  }
  const double classes = static_cast<double>(x.cols());
  Matrix smoothed = targets;
  for (double& v : smoothed.data()) {
    v = (1.0 - smoothing) * v + smoothing / classes;
  }
  const Matrix logp = log_softmax_rows(x);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      loss -= smoothed(i, j) * logp(i, j);
  loss /= static_cast<double>(x.rows());

  Node n;
  n.op = TapeOp::SoftmaxCrossEntropy;
  n.parents = {logits.id};
  n.value = Matrix(1, 1, loss);
  n.cache = {softmax_rows(x), std::move(smoothed)};
  return push(std::move(n));
}

Var Tape::pool_rows(Var a, RowGroups groups) {
  const Matrix& va = value(a);
  Node n;
  n.op = TapeOp::PoolRows;
  n.parents = {a.id};
  n.value = Matrix(groups.size(), va.cols());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) throw ParameterError("pool_rows: empty group");
    auto out = n.value.row(i);
    for (std::size_t r : groups[i]) {
      if (r >= va.rows()) {
        throw ParameterError("pool_rows: row " + std::to_string(r) +
                             " out of range");
      }
      auto src = va.row(r);
      for (std::size_t j = 0; j < va.cols(); ++j) out[j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(groups[i].size());
    for (double& v : out) v *= inv;
  }
  n.groups = std::move(groups);
  return push(std::move(n));
}

Var Tape::hop_attention(Var query, std::span<const Var> hops) {
  if (hops.empty()) throw ParameterError("hop_attention: no hops");
  const Matrix& q = value(query);
  const std::size_t rows = q.rows();
  const std::size_t width = q.cols();
  for (Var h : hops) {
    if (!value(h).same_shape(q)) {
      throw ParameterError("hop_attention: hop shape differs from query");
    }
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(width));
  Matrix scores(rows, hops.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < hops.size(); ++k)
      scores(i, k) = dot(q.row(i), value(hops[k]).row(i)) * inv_sqrt;
  Matrix weights = softmax_rows(scores);

  Node n;
  n.op = TapeOp::HopAttention;
  n.parents.push_back(query.id);
  for (Var h : hops) n.parents.push_back(h.id);
  n.value = Matrix(rows, width);
  for (std::size_t i = 0; i < rows; ++i) {
    auto out = n.value.row(i);
    for (std::size_t k = 0; k < hops.size(); ++k) {
      auto src = value(hops[k]).row(i);
      const double w = weights(i, k);
      for (std::size_t j = 0; j < width; ++j) out[j] += w * src[j];
    }
  }
  n.scalar = inv_sqrt;
  n.cache = {std::move(weights)};
  return push(std::move(n));
}

Var Tape::solve_spd(Var k, Var b) {
  Node n;
  n.op = TapeOp::SolveSpd;
  n.parents = {k.id, b.id};
  n.factor.emplace(value(k));
  n.value = n.factor->solve(value(b));
  return push(std::move(n));
}

void Tape::backward(Var root) {
  if (root.id >= nodes_.size()) throw ParameterError("backward: unknown node");
  const Matrix& r = nodes_[root.id].value;
  if (r.rows() != 1 || r.cols() != 1) {
    throw ParameterError("backward: root must be a 1 x 1 scalar");
  }
  for (Node& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
  nodes_[root.id].grad(0, 0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) backward_node(i);
}

void Tape::backward_node(std::size_t index) {
  Node& n = nodes_[index];
  const Matrix& g = n.grad;
  switch (n.op) {
    case TapeOp::Leaf:
      return;
    case TapeOp::MatMul: {
      const Matrix& a = nodes_[n.parents[0]].value;
      const Matrix& b = nodes_[n.parents[1]].value;
      if (!n.flag_a && !n.flag_b) {
        grad_of(n.parents[0]) += matmul_nt(g, b);
        grad_of(n.parents[1]) += matmul_tn(a, g);
      } else if (n.flag_a && !n.flag_b) {
        grad_of(n.parents[0]) += matmul_nt(b, g);
        grad_of(n.parents[1]) += rlab::matmul(a, g);
      } else if (!n.flag_a && n.flag_b) {
        grad_of(n.parents[0]) += rlab::matmul(g, b);
        grad_of(n.parents[1]) += matmul_tn(g, a);
      } else {
        grad_of(n.parents[0]) += rlab::matmul(b.transpose(), g.transpose());
        grad_of(n.parents[1]) += rlab::matmul(g.transpose(), a.transpose());
      }
      return;
    }
    case TapeOp::Add: {
      grad_of(n.parents[0]) += g;
      if (!n.flag_b) {
        grad_of(n.parents[1]) += g;
      } else {
        Matrix& gb = grad_of(n.parents[1]);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
      }
      return;
    }
    case TapeOp::Scale:
      grad_of(n.parents[0]) += n.scalar * g;
      return;
    case TapeOp::AppendOnes: {
      Matrix& ga = grad_of(n.parents[0]);
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(i, j);
      return;
    }
    case TapeOp::Hadamard: {
      const Matrix& a = nodes_[n.parents[0]].value;
      const Matrix& b = nodes_[n.parents[1]].value;
      grad_of(n.parents[0]) += rlab::hadamard(g, b);
      grad_of(n.parents[1]) += rlab::hadamard(g, a);
      return;
    }
    case TapeOp::Relu: {
      const Matrix& a = nodes_[n.parents[0]].value;
      Matrix& ga = grad_of(n.parents[0]);
      auto ad = a.data();
      auto gd = g.data();
      auto out = ga.data();
      for (std::size_t i = 0; i < ad.size(); ++i)
        if (ad[i] > 0.0) out[i] += gd[i];
      return;
    }
    case TapeOp::SoftmaxCrossEntropy: {
      const Matrix& probs = n.cache[0];
      const Matrix& targets = n.cache[1];
      const double coef = g(0, 0) / static_cast<double>(probs.rows());
      Matrix& ga = grad_of(n.parents[0]);
      for (std::size_t i = 0; i < probs.rows(); ++i)
        for (std::size_t j = 0; j < probs.cols(); ++j)
          ga(i, j) += coef * (probs(i, j) - targets(i, j));
      return;
    }
    case TapeOp::PoolRows: {
      Matrix& ga = grad_of(n.parents[0]);
      for (std::size_t i = 0; i < n.groups.size(); ++i) {
        const double inv = 1.0 / static_cast<double>(n.groups[i].size());
        auto src = g.row(i);
        for (std::size_t r : n.groups[i]) {
          auto dst = ga.row(r);
          for (std::size_t j = 0; j < src.size(); ++j) dst[j] += inv * src[j];
        }
      }
      return;
    }
    case TapeOp::HopAttention: {
      const Matrix& weights = n.cache[0];
      const std::size_t hops = n.parents.size() - 1;
      const Matrix& q = nodes_[n.parents[0]].value;
      const std::size_t rows = q.rows();
      const std::size_t width = q.cols();
      for (std::size_t i = 0; i < rows; ++i) {
        auto gi = g.row(i);
        // d loss / d weight_k = <g_i, hop_k,i>
        std::vector<double> dweight(hops);
        double mean = 0.0;
        for (std::size_t k = 0; k < hops; ++k) {
          dweight[k] = dot(gi, nodes_[n.parents[k + 1]].value.row(i));
          mean += weights(i, k) * dweight[k];
        }
        auto gq = grad_of(n.parents[0]).row(i);
        for (std::size_t k = 0; k < hops; ++k) {
          const double w = weights(i, k);
          const double dscore = w * (dweight[k] - mean) * n.scalar;
          const auto hop = nodes_[n.parents[k + 1]].value.row(i);
          auto gh = grad_of(n.parents[k + 1]).row(i);
          for (std::size_t j = 0; j < width; ++j) {
            gh[j] += w * gi[j] + dscore * q(i, j);
            gq[j] += dscore * hop[j];
          }
        }
      }
      return;
    }
    case TapeOp::SolveSpd: {
      const Matrix rhs_grad = n.factor->solve(g);
      grad_of(n.parents[1]) += rhs_grad;
      grad_of(n.parents[0]) -= matmul_nt(rhs_grad, n.value);
      return;
    }
  }
}

namespace {

double evaluate(const TapeProgram& f, std::span<const Matrix> params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix& p : params) leaves.push_back(tape.leaf(p));
  const Var root = f(tape, leaves);
  const Matrix& v = tape.value(root);
  if (v.rows() != 1 || v.cols() != 1) {
    throw ParameterError("grad_check: program must return a 1 x 1 scalar");
  }
  if (!std::isfinite(v(0, 0))) {
    throw EvaluationError("grad_check: program returned a non-finite value");
  }
  return v(0, 0);
}

}  // namespace

double grad_check(const TapeProgram& f, std::span<const Matrix> params,
                  double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw ParameterError("grad_check: eps must lie in [1e-6, 1e-3]");
  }
  Tape tape;
  std::vector<Var> leaves;
  for (const Matrix& p : params) leaves.push_back(tape.leaf(p));
  const Var root = f(tape, leaves);
  if (!std::isfinite(tape.value(root)(0, 0))) {
    throw EvaluationError("grad_check: program returned a non-finite value");
  }
  tape.backward(root);

  std::vector<Matrix> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    const Matrix& analytic = tape.grad(leaves[p]);
    auto entries = probe[p].data();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double saved = entries[i];
      entries[i] = saved + eps;
      const double plus = evaluate(f, probe);
      entries[i] = saved - eps;
      const double minus = evaluate(f, probe);
      entries[i] = saved;
      const double fd = (plus - minus) / (2.0 * eps);
      const double err =
          std::abs(analytic.data()[i] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace rlab

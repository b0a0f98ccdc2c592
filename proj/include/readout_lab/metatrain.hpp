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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "readout_lab/episodes.hpp"
#include "readout_lab/graphkit.hpp"
#include "readout_lab/linalg.hpp"
#include "readout_lab/matrix.hpp"
#include "readout_lab/tape.hpp"

namespace rlab {

enum class EncoderVariant { Mlp = 0, HopAttention = 1 };

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::HopAttention;
  std::size_t hops = 3;  // ell; the input stack has ell + 1 matrices
  double dropout = 0.1;
  std::size_t d_in = 16;
  std::size_t hidden = 32;
  std::size_t d_z = 16;

  void validate() const;
};

/// Tensor order for HopAttention: hop projections 0..ell (d_in x h), query
/// (h x h), then the residual MLP w1 b1 w2 b2 w3 b3. Mlp keeps only the MLP,
/// with w1 of shape d_in x h.
struct EncoderLayout {
  std::size_t hop_proj = 0;
  std::size_t query = 0;
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0;
  std::size_t count = 0;
};

EncoderLayout encoder_layout(const EncoderConfig& config);

struct EncoderParams {
  EncoderConfig config;
  std::vector<Matrix> tensors;

  /// Shapes against the config, finiteness of every entry.
  void validate() const;
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed);

/// One leaf per tensor, in layout order.
std::vector<Var> bind_params(Tape& tape, const EncoderParams& params);

/// HopAttention: P_k = H_k W_k, query = P_0 Wq, per-node softmax attention
/// over k with scores <query, P_k> / sqrt(h), then the residual MLP
///   h1 = relu(c W1 + b1), h2 = h1 + relu(h1 W2 + b2), z = h2 W3 + b3.
/// Mlp feeds H_0 straight into the same MLP. Dropout (inverted, at the
/// configured rate) hits h1 and the residual branch only, and only when
/// `dropout_rng` is given. Throws ParameterError on shape mismatch.
Var encode(Tape& tape, const EncoderParams& params, std::span<const Var> weights,
           std::span<const Matrix> hops, Rng* dropout_rng = nullptr);

/// Evaluation-mode forward pass.
Matrix embed(const EncoderParams& params, std::span<const Matrix> hops);

/// A pool of graphs of one task kind with their frozen encoder inputs.
struct TaskSource {
  TaskKind kind = TaskKind::Node;
  std::vector<GraphData> graphs;
  std::vector<HopStack> inputs;      // one per graph
  std::vector<NegativePool> pools;   // edge sources only, one per graph
};

struct SourceOptions {
  std::size_t d_in = 16;
  std::size_t hops = 3;
  std::size_t power_iters = 2;
  /// Largest K + Q an edge episode will request; sizes the negative pools.
  std::size_t max_demand = 96;
  std::uint64_t seed = 0;
};

/// Aligns features (align_features), builds the hop stacks and, for edge
/// sources, one negative pool of 10x max_demand pairs per graph.
TaskSource make_task_source(TaskKind kind, std::vector<GraphData> graphs,
                            const SourceOptions& options);

struct EpisodeLoss {
  Var loss;
  Var logits;
  double query_accuracy = 0.0;
};

/// Encodes the referenced rows, fits the ridge head on the support rows
/// inside the tape and returns the label-smoothed query cross-entropy.
EpisodeLoss episode_loss(Tape& tape, const EncoderParams& params,
                         std::span<const Var> weights, const Episode& episode,
                         const TaskSource& source, double lambda,
                         double label_smoothing, Rng* dropout_rng = nullptr);

/// Evaluation-mode embeddings of every graph in the source, assembled.
AssembledEpisode embed_episode(const EncoderParams& params, const Episode& episode,
                               const TaskSource& source);

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t episodes_per_step = 1;  // 1: one task per step, 3: one of each
  double lambda = 10.0;
  double label_smoothing = 0.1;
  double lr = 3e-4;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t k_min = 8, k_max = 32;
  std::size_t q_min = 16, q_max = 64;
  std::size_t max_classes = 64;
  std::array<double, 3> task_weights{1.0, 1.0, 1.0};  // node, edge, graph
  EncoderConfig encoder;
  std::uint64_t seed = 0;

  void validate() const;
};

/// lr * (1 + cos(pi * step / steps)) / 2.
double cosine_lr(double lr, std::size_t step, std::size_t steps);

/// Rescales all gradients in place so their joint Frobenius norm is at most
/// `max_norm`. Returns the norm before clipping.
double clip_global_norm(std::span<Matrix> grads, double max_norm);

/// Decoupled weight decay; the decay term is multiplied by the step's lr.
class AdamW {
 public:
  AdamW(const std::vector<Matrix>& params, const TrainConfig& config);
  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, double lr);

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

struct ScheduledEpisode {
  std::size_t source = 0;  // index into the task sources
  Episode episode;
};

/// The episodes of training step `step`. Depends only on config and sources,
/// never on parameters, so a run can be replayed against other weights.
std::vector<ScheduledEpisode> schedule_step(const TrainConfig& config,
                                            std::span<const TaskSource> sources,
                                            std::size_t step);

struct TrainLogRow {
  std::size_t step = 0;
  TaskKind task = TaskKind::Node;
  double loss = 0.0;
  double query_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  EncoderParams initial;
  EncoderParams params;
  std::vector<TrainLogRow> log;  // one row per episode
};

/// Episodic meta-training. Throws ParameterError when a required task kind
/// has no source and DivergenceError naming the step on a non-finite loss.
TrainResult train(const TrainConfig& config, std::span<const TaskSource> sources);

void write_train_log(std::ostream& out, std::span<const TrainLogRow> log);
void save_checkpoint(const std::string& path, const EncoderParams& params);
EncoderParams load_checkpoint(const std::string& path);

/// Mean query accuracy over the last `window` log rows.
double final_window_accuracy(std::span<const TrainLogRow> log, std::size_t window);

/// Three-class node task on a graph whose node features are the bimodal
/// cloud (A = two modes, B and C one each, 100 nodes per class).
struct DemoSetup {
  TrainConfig config;
  std::vector<TaskSource> sources;
};

DemoSetup bimodal_demo(std::uint64_t seed = 0);

/// Prototype-readout query accuracy of `params` (evaluation mode) on the
/// episodes training would see at steps [first, last).
double replay_prototype_accuracy(const EncoderParams& params, const TrainConfig& config,
                                 std::span<const TaskSource> sources, std::size_t first,
                                 std::size_t last);

}  // namespace rlab

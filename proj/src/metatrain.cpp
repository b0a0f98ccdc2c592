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


#include "readout_lab/metatrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "readout_lab/errors.hpp"
#include "readout_lab/io.hpp"
#include "readout_lab/readouts.hpp"
#include "readout_lab/synthetic.hpp"

namespace rlab {
namespace {

constexpr std::uint64_t kInitStream = 0xffffffffULL;
constexpr std::uint64_t kDropoutSalt = 0x5bd1e9955bd1e995ULL;

bool is_whole(double v) { return v >= 0.0 && std::floor(v) == v && v < 1e15; }

std::vector<std::pair<std::size_t, std::size_t>> tensor_shapes(const EncoderConfig& c) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  const std::size_t h = c.hidden;
  if (c.variant == EncoderVariant::HopAttention) {
    for (std::size_t k = 0; k <= c.hops; ++k) shapes.emplace_back(c.d_in, h);
    shapes.emplace_back(h, h);
    shapes.emplace_back(h, h);
  } else {
    shapes.emplace_back(c.d_in, h);
  }
  shapes.emplace_back(1, h);
  shapes.emplace_back(h, h);
  shapes.emplace_back(1, h);
  shapes.emplace_back(h, c.d_z);
  shapes.emplace_back(1, c.d_z);
  return shapes;
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix mask(rows, cols);
  for (double& v : mask.data()) v = keep(rng) ? scale : 0.0;
  return mask;
}

// Stacked encoder inputs for one episode plus the row groups that turn the
// encoded block into support and query rows.
struct GatheredInputs {
  std::vector<Matrix> hops;
  Tape::RowGroups support_a, support_b, query_a, query_b;  // *_b: edge tasks
};

GatheredInputs gather_inputs(const Episode& ep, const TaskSource& source) {
  GatheredInputs out;
  std::vector<std::pair<std::size_t, std::size_t>> refs;  // (graph, node)
  auto add_node = [&](std::size_t graph, std::size_t node, Tape::RowGroups& groups) {
    if (graph >= source.inputs.size()) {
      throw AssemblyError("missing embeddings for graph " + std::to_string(graph));
    }
    if (node >= source.inputs[graph].hops.front().rows()) {
      throw AssemblyError("missing embedding for node " + std::to_string(node) +
                          " of graph " + std::to_string(graph));
    }
    groups.push_back({refs.size()});
    refs.emplace_back(graph, node);
  };

  switch (ep.task) {
    case TaskKind::Node:
      for (std::size_t v : ep.support_ids) add_node(ep.source, v, out.support_a);
      for (std::size_t v : ep.query_ids) add_node(ep.source, v, out.query_a);
      break;
    case TaskKind::Edge:
      for (const auto& [u, v] : ep.support_pairs) {
        add_node(ep.source, u, out.support_a);
        add_node(ep.source, v, out.support_b);
      }
      for (const auto& [u, v] : ep.query_pairs) {
        add_node(ep.source, u, out.query_a);
        add_node(ep.source, v, out.query_b);
      }
      break;
    case TaskKind::Graph: {
      auto add_graph = [&](std::size_t graph, Tape::RowGroups& groups) {
        if (graph >= source.inputs.size() || source.inputs[graph].hops.front().rows() == 0) {
          throw AssemblyError("missing embeddings for graph " + std::to_string(graph));
        }
        std::vector<std::size_t> rows;
        for (std::size_t v = 0; v < source.inputs[graph].hops.front().rows(); ++v) {
          rows.push_back(refs.size());
          refs.emplace_back(graph, v);
        }
        groups.push_back(std::move(rows));
      };
      for (std::size_t g : ep.support_ids) add_graph(g, out.support_a);
      for (std::size_t g : ep.query_ids) add_graph(g, out.query_a);
      break;
    }
  }

  const std::size_t levels = source.inputs.front().hops.size();
  const std::size_t width = source.inputs.front().hops.front().cols();
  out.hops.assign(levels, Matrix(refs.size(), width));
  for (std::size_t k = 0; k < levels; ++k) {
    for (std::size_t r = 0; r < refs.size(); ++r) {
      const auto src = source.inputs[refs[r].first].hops[k].row(refs[r].second);
      std::copy(src.begin(), src.end(), out.hops[k].row(r).begin());
    }
  }
  return out;
}

std::vector<std::size_t> sources_of(std::span<const TaskSource> sources, TaskKind kind) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (sources[i].kind == kind) idx.push_back(i);
  return idx;
}

constexpr std::array<TaskKind, 3> kAllKinds{TaskKind::Node, TaskKind::Edge, TaskKind::Graph};

}  // namespace

void EncoderConfig::validate() const {
  if (d_in == 0 || hidden == 0 || d_z == 0) {
    throw ParameterError("encoder: d_in, hidden and d_z must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ParameterError("encoder: dropout must lie in [0, 1)");
  }
}

EncoderLayout encoder_layout(const EncoderConfig& config) {
  EncoderLayout l;
  std::size_t next = 0;
  if (config.variant == EncoderVariant::HopAttention) {
    l.hop_proj = 0;
    next = config.hops + 1;
    l.query = next++;
  }
  l.w1 = next++;
  l.b1 = next++;
  l.w2 = next++;
  l.b2 = next++;
  l.w3 = next++;
  l.b3 = next++;
  l.count = next;
  return l;
}

void EncoderParams::validate() const {
  config.validate();
  const auto shapes = tensor_shapes(config);
  if (tensors.size() != shapes.size()) {
    throw ParameterError("encoder: expected " + std::to_string(shapes.size()) +
                         " tensors, got " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (tensors[i].rows() != shapes[i].first || tensors[i].cols() != shapes[i].second) {
      throw ParameterError("encoder: tensor " + std::to_string(i) + " has the wrong shape");
    }
    if (!tensors[i].all_finite()) {
      throw ParameterError("encoder: tensor " + std::to_string(i) + " is not finite");
    }
  }
}

EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  EncoderParams p;
  p.config = config;
  Rng rng(seed);
  for (const auto& [rows, cols] : tensor_shapes(config)) {
    Matrix m(rows, cols);
    if (rows > 1) {  // weight matrix; 1 x n tensors are biases
      const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& v : m.data()) v = u(rng);
    }
    p.tensors.push_back(std::move(m));
  }
  return p;
}

std::vector<Var> bind_params(Tape& tape, const EncoderParams& params) {
  std::vector<Var> vars;
  vars.reserve(params.tensors.size());
  for (const Matrix& t : params.tensors) vars.push_back(tape.leaf(t));
  return vars;
}

Var encode(Tape& tape, const EncoderParams& params, std::span<const Var> weights,
           std::span<const Matrix> hops, Rng* dropout_rng) {
  const EncoderConfig& cfg = params.config;
  const EncoderLayout l = encoder_layout(cfg);
  if (weights.size() != l.count) throw ParameterError("encode: wrong number of weights");
  const std::size_t needed =
      cfg.variant == EncoderVariant::HopAttention ? cfg.hops + 1 : 1;
  if (hops.size() < needed) {
    throw ParameterError("encode: expected " + std::to_string(needed) + " hop matrices, got " +
                         std::to_string(hops.size()));
  }
  for (std::size_t k = 0; k < needed; ++k) {
    if (hops[k].cols() != cfg.d_in || hops[k].rows() != hops[0].rows()) {
      throw ParameterError("encode: hop " + std::to_string(k) + " has shape " +
                           std::to_string(hops[k].rows()) + "x" +
                           std::to_string(hops[k].cols()) + ", expected d_in = " +
                           std::to_string(cfg.d_in));
    }
  }

  Var input;
  if (cfg.variant == EncoderVariant::HopAttention) {
    std::vector<Var> projected;
    for (std::size_t k = 0; k < needed; ++k)
      projected.push_back(tape.matmul(tape.leaf(hops[k]), weights[l.hop_proj + k]));
    const Var query = tape.matmul(projected.front(), weights[l.query]);
    input = tape.hop_attention(query, projected);
  } else {
    input = tape.leaf(hops[0]);
  }

  const bool drop = dropout_rng != nullptr && cfg.dropout > 0.0;
  auto maybe_drop = [&](Var v) {
    if (!drop) return v;
    const Matrix& x = tape.value(v);
    return tape.hadamard(v, tape.leaf(dropout_mask(x.rows(), x.cols(), cfg.dropout,
                                                   *dropout_rng)));
  };
  Var h1 = maybe_drop(tape.relu(tape.add(tape.matmul(input, weights[l.w1]), weights[l.b1])));
  Var branch = maybe_drop(tape.relu(tape.add(tape.matmul(h1, weights[l.w2]), weights[l.b2])));
  Var h2 = tape.add(h1, branch);
  return tape.add(tape.matmul(h2, weights[l.w3]), weights[l.b3]);
}

Matrix embed(const EncoderParams& params, std::span<const Matrix> hops) {
  Tape tape;
  const auto weights = bind_params(tape, params);
  return tape.value(encode(tape, params, weights, hops));
}

TaskSource make_task_source(TaskKind kind, std::vector<GraphData> graphs,
                            const SourceOptions& options) {
  if (graphs.empty()) throw ParameterError("task source: no graphs");
  TaskSource src;
  src.kind = kind;
  src.graphs = std::move(graphs);
  for (std::size_t i = 0; i < src.graphs.size(); ++i) {
    const GraphData& g = src.graphs[i];
    g.validate();
    const std::size_t d = std::min(options.d_in, g.n);
    Matrix x0 = align_features(g, d, options.power_iters, derive_seed(options.seed, i));
    if (d < options.d_in) {
      // Small graphs (graph-classification pools) are zero-padded to d_in.
      Matrix padded(x0.rows(), options.d_in);
      for (std::size_t r = 0; r < x0.rows(); ++r)
        std::copy(x0.row(r).begin(), x0.row(r).end(), padded.row(r).begin());
      x0 = std::move(padded);
    }
    src.inputs.push_back(hop_stack(x0, sym_normalize(g), options.hops));
    if (kind == TaskKind::Edge) {
      src.pools.emplace_back(g, kNegativePoolFactor * options.max_demand,
                             derive_seed(options.seed ^ 0x9e3779b97f4a7c15ULL, i));
    }
  }
  return src;
}

EpisodeLoss episode_loss(Tape& tape, const EncoderParams& params,
                         std::span<const Var> weights, const Episode& episode,
                         const TaskSource& source, double lambda,
                         double label_smoothing, Rng* dropout_rng) {
  if (episode.task != source.kind) throw ParameterError("episode_loss: task kind mismatch");
  const GatheredInputs in = gather_inputs(episode, source);
  const Var z = encode(tape, params, weights, in.hops, dropout_rng);
  Var zs = tape.pool_rows(z, in.support_a);
  Var zq = tape.pool_rows(z, in.query_a);
  if (episode.task == TaskKind::Edge) {
    zs = tape.hadamard(zs, tape.pool_rows(z, in.support_b));
    zq = tape.hadamard(zq, tape.pool_rows(z, in.query_b));
  }
  const std::size_t classes = episode.num_classes();
  const Matrix ys = one_hot(episode.support_labels, classes);
  const Matrix yq = one_hot(episode.query_labels, classes);
  EpisodeLoss out;
  out.logits = ridge_logits_on_tape(tape, zs, ys, zq, lambda);
  out.loss = tape.softmax_cross_entropy(out.logits, yq, label_smoothing);
  out.query_accuracy = accuracy(tape.value(out.logits), episode.query_labels);
  return out;
}

AssembledEpisode embed_episode(const EncoderParams& params, const Episode& episode,
                               const TaskSource& source) {
  std::vector<Matrix> embeddings;
  embeddings.reserve(source.inputs.size());
  for (const HopStack& stack : source.inputs) embeddings.push_back(embed(params, stack.hops));
  return assemble(episode, embeddings);
}

void TrainConfig::validate() const {
  encoder.validate();
  if (episodes_per_step != 1 && episodes_per_step != 3) {
    throw ParameterError("train: episodes_per_step must be 1 or 3");
  }
  if (!(lambda > 0.0)) throw ParameterError("train: lambda must be positive");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ParameterError("train: label_smoothing must lie in [0, 1)");
  }
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) {
    throw ParameterError("train: lr and weight_decay must be non-negative");
  }
  if (!(clip_norm > 0.0)) throw ParameterError("train: clip_norm must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw ParameterError("train: invalid AdamW moments");
  }
  if (k_min == 0 || k_min > k_max || q_min == 0 || q_min > q_max) {
    throw ParameterError("train: need 1 <= k_min <= k_max and 1 <= q_min <= q_max");
  }
  if (max_classes < 2) throw ParameterError("train: max_classes must be at least 2");
  for (double w : task_weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("train: task weights must be non-negative");
}

double cosine_lr(double lr, std::size_t step, std::size_t steps) {
  if (steps == 0) return lr;
  const double frac = static_cast<double>(std::min(step, steps)) / static_cast<double>(steps);
  return lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

double clip_global_norm(std::span<Matrix> grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Matrix& g : grads) g *= s;
  }
  return norm;
}

AdamW::AdamW(const std::vector<Matrix>& params, const TrainConfig& config)
    : beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.adam_eps),
      weight_decay_(config.weight_decay) {
  for (const Matrix& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void AdamW::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ParameterError("AdamW: parameter count changed");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double update = (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
      p[j] -= lr * (update + weight_decay_ * p[j]);
    }
  }
}

std::vector<ScheduledEpisode> schedule_step(const TrainConfig& config,
                                            std::span<const TaskSource> sources,
                                            std::size_t step) {
  Rng rng(derive_seed(config.seed, step));
  std::vector<TaskKind> kinds;
  if (config.episodes_per_step == 3) {
    kinds.assign(kAllKinds.begin(), kAllKinds.end());
  } else {
    double total = 0.0;
    for (TaskKind k : kAllKinds)
      if (!sources_of(sources, k).empty()) total += config.task_weights[static_cast<int>(k)];
    if (!(total > 0.0)) throw ParameterError("train: no task source with positive weight");
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    TaskKind chosen = TaskKind::Node;
    bool found = false;
    for (TaskKind k : kAllKinds) {
      const double w = config.task_weights[static_cast<int>(k)];
      if (sources_of(sources, k).empty() || w <= 0.0) continue;
      chosen = k;
      found = true;
      if (u < w) break;
      u -= w;
    }
    if (!found) throw ParameterError("train: no task source with positive weight");
    kinds.push_back(chosen);
  }

  SampleOptions options;
  options.max_classes = config.max_classes;
  std::vector<ScheduledEpisode> out;
  for (TaskKind kind : kinds) {
    const auto candidates = sources_of(sources, kind);
    if (candidates.empty()) {
      throw ParameterError(std::string("train: no task source for ") + task_name(kind) +
                           " tasks");
    }
    auto pick = [&](std::size_t n) {
      return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    };
    ScheduledEpisode s;
    s.source = candidates[pick(candidates.size())];
    const TaskSource& src = sources[s.source];
    const std::size_t k =
        std::uniform_int_distribution<std::size_t>(config.k_min, config.k_max)(rng);
    const std::size_t q =
        std::uniform_int_distribution<std::size_t>(config.q_min, config.q_max)(rng);
    const std::size_t graph = pick(src.graphs.size());
    const std::uint64_t seed = rng();
    switch (kind) {
      case TaskKind::Node:
        s.episode = sample_node_episode(src.graphs[graph], k, q, seed, options, graph);
        break;
      case TaskKind::Edge:
        s.episode = sample_edge_episode(src.graphs[graph], k, q, seed,
                                        src.pools.empty() ? nullptr : &src.pools[graph], graph);
        break;
      case TaskKind::Graph:
        s.episode = sample_graph_episode(src.graphs, k, q, seed, options);
        break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

TrainResult train(const TrainConfig& config, std::span<const TaskSource> sources) {
  config.validate();
  if (sources.empty()) throw ParameterError("train: no task sources");
  for (const TaskSource& s : sources) {
    if (s.graphs.empty() || s.inputs.size() != s.graphs.size()) {
      throw ParameterError("train: task source without prepared inputs");
    }
    if (s.inputs.front().hops.front().cols() != config.encoder.d_in) {
      throw ParameterError("train: source features do not match encoder d_in");
    }
  }
  if (config.episodes_per_step == 3) {
    for (TaskKind k : kAllKinds) {
      if (sources_of(sources, k).empty()) {
        throw ParameterError(std::string("train: one episode per task type needs a ") +
                             task_name(k) + " source");
      }
    }
  }

  TrainResult result;
  result.initial = init_encoder(config.encoder, derive_seed(config.seed, kInitStream));
  result.params = result.initial;
  AdamW optimizer(result.params.tensors, config);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const double lr = cosine_lr(config.lr, step, config.steps);
    const auto episodes = schedule_step(config, sources, step);
    Rng dropout_rng(derive_seed(config.seed ^ kDropoutSalt, step));

    Tape tape;
    const auto weights = bind_params(tape, result.params);
    Var total{};
    std::vector<TrainLogRow> rows;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      const auto& s = episodes[e];
      EpisodeLoss el;
      try {
        el = episode_loss(tape, result.params, weights, s.episode, sources[s.source],
                          config.lambda, config.label_smoothing, &dropout_rng);
      } catch (const NotPositiveDefinite& e) {
        // G + lambda I is SPD for any finite embedding, so this means overflow.
        throw DivergenceError("non-finite loss at step " + std::to_string(step) + " (" +
                              e.what() + ")");
      }
      total = e == 0 ? el.loss : tape.add(total, el.loss);
      rows.push_back({step, s.episode.task, tape.value(el.loss)(0, 0), el.query_accuracy, lr});
    }
    if (episodes.size() > 1) total = tape.scale(total, 1.0 / static_cast<double>(episodes.size()));
    if (!std::isfinite(tape.value(total)(0, 0))) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step));
    }
    tape.backward(total);
    std::vector<Matrix> grads;
    grads.reserve(weights.size());
    for (Var w : weights) grads.push_back(tape.grad(w));
    clip_global_norm(grads, config.clip_norm);
    optimizer.step(result.params.tensors, grads, lr);
    result.log.insert(result.log.end(), rows.begin(), rows.end());
  }
  return result;
}

void write_train_log(std::ostream& out, std::span<const TrainLogRow> log) {
  out << "step,task,loss,query_acc,lr\n";
  for (const auto& r : log) {
    out << r.step << ',' << task_name(r.task) << ',' << format_double(r.loss) << ','
        << format_double(r.query_accuracy) << ',' << format_double(r.lr) << '\n';
  }
}

void save_checkpoint(const std::string& path, const EncoderParams& params) {
  params.validate();
  const EncoderConfig& c = params.config;
  Container box;
  box.header = {static_cast<double>(c.variant), static_cast<double>(c.hops), c.dropout,
                static_cast<double>(c.d_in), static_cast<double>(c.hidden),
                static_cast<double>(c.d_z)};
  box.matrices = params.tensors;
  write_container_file(path, box);
}

EncoderParams load_checkpoint(const std::string& path) {
  Container box = read_container_file(path);
  const auto& h = box.header;
  if (h.size() != 6) throw FormatError(path + ": checkpoint header must hold 6 values");
  if (!(h[0] == 0.0 || h[0] == 1.0) || !is_whole(h[1]) || !is_whole(h[3]) ||
      !is_whole(h[4]) || !is_whole(h[5])) {
    throw FormatError(path + ": malformed checkpoint header");
  }
  EncoderParams p;
  p.config.variant = h[0] == 0.0 ? EncoderVariant::Mlp : EncoderVariant::HopAttention;
  p.config.hops = static_cast<std::size_t>(h[1]);
  p.config.dropout = h[2];
  p.config.d_in = static_cast<std::size_t>(h[3]);
  p.config.hidden = static_cast<std::size_t>(h[4]);
  p.config.d_z = static_cast<std::size_t>(h[5]);
  p.tensors = std::move(box.matrices);
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return p;
}

double final_window_accuracy(std::span<const TrainLogRow> log, std::size_t window) {
  if (log.empty() || window == 0) return 0.0;
  const std::size_t n = std::min(window, log.size());
  double s = 0.0;
  for (std::size_t i = log.size() - n; i < log.size(); ++i) s += log[i].query_accuracy;
  return s / static_cast<double>(n);
}

DemoSetup bimodal_demo(std::uint64_t seed) {
  DemoSetup demo;
  TrainConfig& cfg = demo.config;
  cfg.steps = 500;
  cfg.seed = seed;
  cfg.encoder.d_in = 16;
  cfg.encoder.hidden = 32;
  cfg.encoder.d_z = 16;

  BimodalOptions opt;
  opt.d = 8;
  Rng rng(derive_seed(seed, 1));
  const LabeledPoints pts = bimodal_points(3.0, opt, rng);

  // Structure is task-neutral (one Erdos-Renyi block), so everything the
  // encoder learns about the classes comes from the features.
  const std::size_t n = pts.labels.size();
  GraphData g = generate_sbm(n, {n}, 0.02, 0.02, derive_seed(seed, 3));
  g.node_features = pts.x;
  g.node_labels = pts.labels;

  SourceOptions so;
  so.d_in = cfg.encoder.d_in;
  so.hops = cfg.encoder.hops;
  so.seed = derive_seed(seed, 2);
  std::vector<GraphData> graphs;
  graphs.push_back(std::move(g));
  demo.sources.push_back(make_task_source(TaskKind::Node, std::move(graphs), so));
  return demo;
}

double replay_prototype_accuracy(const EncoderParams& params, const TrainConfig& config,
                                 std::span<const TaskSource> sources, std::size_t first,
                                 std::size_t last) {
  if (first >= last) throw ParameterError("replay: empty step range");
  // Embeddings do not depend on the episode; compute them once per source.
  std::vector<std::vector<Matrix>> cache(sources.size());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t step = first; step < last; ++step) {
    for (const auto& s : schedule_step(config, sources, step)) {
      auto& emb = cache[s.source];
      if (emb.empty())
        for (const HopStack& st : sources[s.source].inputs) emb.push_back(embed(params, st.hops));
      const AssembledEpisode a = assemble(s.episode, emb);
      const PrototypeModel model = fit_prototypes(a.z_s, a.y_s);
      total += accuracy(prototype_logits(model, a.z_q), s.episode.query_labels);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace rlab

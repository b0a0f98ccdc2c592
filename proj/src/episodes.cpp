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

#include "readout_lab/episodes.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>

#include "readout_lab/errors.hpp"
#include "readout_lab/linalg.hpp"

namespace rlab {
namespace {

// First `count` entries of a uniform random permutation.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

struct ClassDraw {
  std::vector<std::size_t> classes;
  std::vector<std::vector<std::size_t>> members;
};

// Groups ids by label, keeps classes with enough members and caps the class
// count by a uniform draw.
ClassDraw draw_classes(const std::map<std::size_t, std::vector<std::size_t>>& by_label,
                       std::size_t need, const SampleOptions& options, Rng& rng,
                       const char* what) {
  ClassDraw draw;
  for (const auto& [label, ids] : by_label) {
    if (ids.size() >= need) {
      draw.classes.push_back(label);
      draw.members.push_back(ids);
    }
  }
  if (draw.classes.size() < 2) {
    throw SamplingError(std::string("insufficient classes for ") + what + " episode: " +
                        std::to_string(draw.classes.size()) + " class(es) have " +
                        std::to_string(need) + " or more members");
  }
  if (options.max_classes < 2) throw ParameterError("max_classes must be at least 2");
  if (draw.classes.size() > options.max_classes) {
    std::vector<std::size_t> order(draw.classes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    partial_shuffle(order, options.max_classes, rng);
    order.resize(options.max_classes);
    std::sort(order.begin(), order.end());
    ClassDraw kept;
    for (std::size_t i : order) {
      kept.classes.push_back(draw.classes[i]);
      kept.members.push_back(std::move(draw.members[i]));
    }
    draw = std::move(kept);
  }
  return draw;
}

void split_members(const ClassDraw& draw, std::size_t k, std::size_t q, bool replace,
                   Rng& rng, Episode& ep) {
  for (std::size_t c = 0; c < draw.classes.size(); ++c) {
    std::vector<std::size_t> ids = draw.members[c];
    const bool short_class = ids.size() < k + q;
    partial_shuffle(ids, short_class ? ids.size() : k + q, rng);
    // Queries take the front of the permutation; supports follow.
    for (std::size_t i = 0; i < q; ++i) {
      ep.query_ids.push_back(ids[i]);
      ep.query_labels.push_back(c);
    }
    if (short_class && replace) {
      std::uniform_int_distribution<std::size_t> pick(q, ids.size() - 1);
      for (std::size_t i = 0; i < k; ++i) ep.support_ids.push_back(ids[pick(rng)]);
    } else {
      for (std::size_t i = 0; i < k; ++i) ep.support_ids.push_back(ids[q + i]);
    }
    ep.support_labels.insert(ep.support_labels.end(), k, c);
  }
}

void check_shots(std::size_t k, std::size_t q) {
  if (k == 0 || q == 0) throw ParameterError("episode needs K >= 1 and Q >= 1");
}

}  // namespace

const char* task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::Node: return "node";
    case TaskKind::Edge: return "edge";
    case TaskKind::Graph: return "graph";
  }
  return "unknown";
}

Episode sample_node_episode(const GraphData& g, std::size_t k, std::size_t q,
                            std::uint64_t seed, const SampleOptions& options,
                            std::size_t source) {
  check_shots(k, q);
  if (!g.node_labels) throw SamplingError("node episode: graph has no node labels");
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t v = 0; v < g.n; ++v) by_label[(*g.node_labels)[v]].push_back(v);
  Rng rng(seed);
  const std::size_t need = options.with_replacement ? q + 1 : k + q;
  const ClassDraw draw = draw_classes(by_label, need, options, rng, "node");
  Episode ep;
  ep.task = TaskKind::Node;
  ep.source = source;
  ep.k = k;
  ep.q = q;
  ep.classes = draw.classes;
  split_members(draw, k, q, options.with_replacement, rng, ep);
  return ep;
}

NegativePool::NegativePool(const GraphData& g, std::size_t size, std::uint64_t seed) {
  const std::size_t total_pairs = g.n < 2 ? 0 : g.n * (g.n - 1) / 2;
  const std::size_t non_edges = total_pairs - g.edges.size();
  if (non_edges == 0) throw SamplingError("negative pool: graph has no non-edges");
  const std::size_t target = std::min(size, non_edges);
  Rng rng(seed);
  if (2 * target >= non_edges) {
    // Dense request: enumerate and subsample.
    std::vector<Edge> all;
    all.reserve(non_edges);
    for (std::size_t u = 0; u < g.n; ++u)
      for (std::size_t v = u + 1; v < g.n; ++v)
        if (!g.has_edge(u, v)) all.emplace_back(u, v);
    partial_shuffle(all, target, rng);
    all.resize(target);
    pairs_ = std::move(all);
    return;
  }
  std::uniform_int_distribution<std::size_t> node(0, g.n - 1);
  std::set<Edge> seen;
  while (pairs_.size() < target) {
    std::size_t u = node(rng);
    std::size_t v = node(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (g.has_edge(u, v) || !seen.insert({u, v}).second) continue;
    pairs_.emplace_back(u, v);
  }
}

Episode sample_edge_episode(const GraphData& g, std::size_t k, std::size_t q,
                            std::uint64_t seed, const NegativePool* pool,
                            std::size_t source) {
  check_shots(k, q);
  const std::size_t need = k + q;
  if (g.edges.size() < need) {
    throw SamplingError("edge episode: graph has " + std::to_string(g.edges.size()) +
                        " edges, need " + std::to_string(need));
  }
  std::optional<NegativePool> own;
  if (pool == nullptr) {
    own.emplace(g, kNegativePoolFactor * need, seed ^ 0x9e3779b97f4a7c15ULL);
    pool = &*own;
  }
  if (pool->pairs().size() < need) {
    throw SamplingError("edge episode: negative pool has " +
                        std::to_string(pool->pairs().size()) + " pairs, need " +
                        std::to_string(need));
  }
  Rng rng(seed);
  std::vector<Edge> positives = g.edges;
  partial_shuffle(positives, need, rng);
  std::vector<Edge> negatives = pool->pairs();
  partial_shuffle(negatives, need, rng);

  Episode ep;
  ep.task = TaskKind::Edge;
  ep.source = source;
  ep.k = k;
  ep.q = q;
  ep.classes = {0, 1};
  const std::vector<Edge>* per_class[2] = {&negatives, &positives};
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& src = *per_class[c];
    for (std::size_t i = 0; i < q; ++i) {
      ep.query_pairs.push_back(src[i]);
      ep.query_labels.push_back(c);
    }
    for (std::size_t i = 0; i < k; ++i) {
      ep.support_pairs.push_back(src[q + i]);
      ep.support_labels.push_back(c);
    }
  }
  return ep;
}

Episode sample_graph_episode(std::span<const GraphData> graphs, std::size_t k,
                             std::size_t q, std::uint64_t seed,
                             const SampleOptions& options) {
  check_shots(k, q);
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    if (graphs[i].graph_label) by_label[*graphs[i].graph_label].push_back(i);
  Rng rng(seed);
  const std::size_t need = options.with_replacement ? q + 1 : k + q;
  const ClassDraw draw = draw_classes(by_label, need, options, rng, "graph");
  Episode ep;
  ep.task = TaskKind::Graph;
  ep.k = k;
  ep.q = q;
  ep.classes = draw.classes;
  split_members(draw, k, q, options.with_replacement, rng, ep);
  return ep;
}

namespace {

void node_row(const Matrix& z, std::size_t v, std::size_t graph, std::span<double> out) {
  if (v >= z.rows()) {
    throw AssemblyError("missing embedding for node " + std::to_string(v) + " of graph " +
                        std::to_string(graph));
  }
  std::copy(z.row(v).begin(), z.row(v).end(), out.begin());
}

const Matrix& graph_embeddings(std::span<const Matrix> embeddings, std::size_t graph) {
  if (graph >= embeddings.size() || embeddings[graph].rows() == 0) {
    throw AssemblyError("missing embeddings for graph " + std::to_string(graph));
  }
  return embeddings[graph];
}

Matrix assemble_rows(const Episode& ep, std::span<const Matrix> embeddings,
                     const std::vector<std::size_t>& ids, const std::vector<Edge>& pairs,
                     std::size_t rows) {
  std::size_t d = 0;
  if (ep.task == TaskKind::Graph) {
    if (ids.empty()) return Matrix();
    d = graph_embeddings(embeddings, ids.front()).cols();
  } else {
    d = graph_embeddings(embeddings, ep.source).cols();
  }
  Matrix out(rows, d);
  switch (ep.task) {
    case TaskKind::Node: {
      const Matrix& z = graph_embeddings(embeddings, ep.source);
      for (std::size_t i = 0; i < rows; ++i) node_row(z, ids[i], ep.source, out.row(i));
      break;
    }
    case TaskKind::Edge: {
      const Matrix& z = graph_embeddings(embeddings, ep.source);
      std::vector<double> other(d);
      for (std::size_t i = 0; i < rows; ++i) {
        node_row(z, pairs[i].first, ep.source, out.row(i));
        node_row(z, pairs[i].second, ep.source, other);
        auto row = out.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] *= other[j];
      }
      break;
    }
    case TaskKind::Graph: {
      for (std::size_t i = 0; i < rows; ++i) {
        const Matrix& z = graph_embeddings(embeddings, ids[i]);
        if (z.cols() != d) throw AssemblyError("graph embeddings differ in width");
        auto row = out.row(i);
        for (std::size_t v = 0; v < z.rows(); ++v)
          for (std::size_t j = 0; j < d; ++j) row[j] += z(v, j);
        for (double& x : row) x /= static_cast<double>(z.rows());
      }
      break;
    }
  }
  return out;
}

}  // namespace

AssembledEpisode assemble(const Episode& ep, std::span<const Matrix> embeddings) {
  const std::size_t c = ep.num_classes();
  AssembledEpisode out;
  out.z_s = assemble_rows(ep, embeddings, ep.support_ids, ep.support_pairs, ep.support_size());
  out.z_q = assemble_rows(ep, embeddings, ep.query_ids, ep.query_pairs, ep.query_size());
  out.y_s = one_hot(ep.support_labels, c);
  out.y_q = one_hot(ep.query_labels, c);
  return out;
}

}  // namespace rlab

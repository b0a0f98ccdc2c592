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
#include <span>
#include <vector>

#include "readout_lab/graphkit.hpp"
#include "readout_lab/matrix.hpp"

namespace rlab {

enum class TaskKind { Node, Edge, Graph };

const char* task_name(TaskKind kind);

/// References into a graph (node and edge tasks) or a graph list (graph
/// tasks). Rows are grouped class by class; labels are episode-local class
/// indices. For edge tasks class 0 is "non-edge" and class 1 is "edge".
struct Episode {
  TaskKind task = TaskKind::Node;
  std::size_t source = 0;  // graph index for node and edge tasks
  std::size_t k = 0;
  std::size_t q = 0;
  std::vector<std::size_t> classes;  // original class id per local class
  std::vector<std::size_t> support_ids;  // node or graph ids
  std::vector<std::size_t> query_ids;
  std::vector<Edge> support_pairs;  // edge tasks only
  std::vector<Edge> query_pairs;
  std::vector<std::size_t> support_labels;
  std::vector<std::size_t> query_labels;

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::size_t support_size() const noexcept { return support_labels.size(); }
  std::size_t query_size() const noexcept { return query_labels.size(); }
};

struct SampleOptions {
  std::size_t max_classes = 64;
  /// Evaluation mode: a class only needs Q + 1 members, and support rows are
  /// drawn with replacement from the non-query remainder when it holds fewer
  /// than K.
  bool with_replacement = false;
};

Episode sample_node_episode(const GraphData& g, std::size_t k, std::size_t q,
                            std::uint64_t seed, const SampleOptions& options = {},
                            std::size_t source = 0);

/// Fixed pool of distinct non-edge pairs drawn uniformly at random.
class NegativePool {
 public:
  /// Throws SamplingError when the graph has no non-edges. The pool holds
  /// min(size, number of non-edges) pairs.
  NegativePool(const GraphData& g, std::size_t size, std::uint64_t seed);

  const std::vector<Edge>& pairs() const noexcept { return pairs_; }

 private:
  std::vector<Edge> pairs_;
};

/// Pool size used when an edge episode builds its own pool.
inline constexpr std::size_t kNegativePoolFactor = 10;

/// K positive and K negative support pairs, Q of each for the query.
/// Negatives come from `pool`, or from a pool of 10 (K + Q) pairs built from
/// `seed` when none is given. Throws SamplingError when there are too few
/// edges or non-edges.
Episode sample_edge_episode(const GraphData& g, std::size_t k, std::size_t q,
                            std::uint64_t seed, const NegativePool* pool = nullptr,
                            std::size_t source = 0);

/// Per-class split over whole graphs, keyed by graph_label.
Episode sample_graph_episode(std::span<const GraphData> graphs, std::size_t k,
                             std::size_t q, std::uint64_t seed,
                             const SampleOptions& options = {});

struct AssembledEpisode {
  Matrix z_s;
  Matrix y_s;
  Matrix z_q;
  Matrix y_q;
};

/// Node rows are z_v, edge rows are z_u * z_v (elementwise), graph rows are
/// the mean node embedding of each graph. `embeddings[i]` holds the node
/// embeddings of graph i. Throws AssemblyError naming a missing reference.
AssembledEpisode assemble(const Episode& episode, std::span<const Matrix> embeddings);

}  // namespace rlab

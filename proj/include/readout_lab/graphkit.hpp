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
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "readout_lab/matrix.hpp"

namespace rlab {

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected simple graph. Edges are stored with u < v in sorted order.
struct GraphData {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::optional<Matrix> node_features;
  std::optional<std::vector<std::size_t>> node_labels;
  std::optional<std::size_t> graph_label;

  /// Throws ValidationError on out-of-range, self-loop, unsorted or
  /// duplicate edges, or on label/feature row counts that differ from n.
  void validate() const;
  bool has_edge(std::size_t u, std::size_t v) const;
};

/// Builds a validated graph from an arbitrary undirected pair list: pairs are
/// oriented to u < v and sorted. Self-loops and duplicates are errors.
GraphData make_graph(std::size_t n, std::vector<Edge> edges);

/// Stochastic block model. Node labels are block ids.
GraphData generate_sbm(std::size_t n, const std::vector<std::size_t>& block_sizes,
                       double p_in, double p_out, std::uint64_t seed);

/// D^-1/2 A D^-1/2 with isolated nodes left as zero rows and columns.
Matrix sym_normalize(const GraphData& g);

/// Frozen input features. Without node features: U diag(S) of the truncated
/// SVD of the normalized adjacency. With node features: ceil(d/2) structure
/// columns followed by floor(d/2) feature columns (U diag(S) of the feature
/// matrix), zero-padded when the feature matrix has too few columns.
Matrix align_features(const GraphData& g, std::size_t d_target,
                      std::size_t power_iters = 2, std::uint64_t seed = 0);

struct HopStack {
  std::vector<Matrix> hops;  // hops[k] = A_norm^k X0, k = 0..ell
};

HopStack hop_stack(const Matrix& x0, const Matrix& a_norm, std::size_t ell);

/// Plain-text graph format:
///
///   # comment
///   n <count>
///   <u> <v>          one undirected edge per line
///   labels           optional, followed by one class id per node
///   <label>
///
/// Blank lines and '#' comments are ignored anywhere. Throws FormatError
/// with the offending line number.
GraphData read_graph(std::istream& in);
GraphData read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const GraphData& g);

}  // namespace rlab

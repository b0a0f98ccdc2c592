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

#include "readout_lab/graphkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "readout_lab/errors.hpp"
#include "readout_lab/linalg.hpp"

namespace rlab {
namespace {

// U diag(S) from a truncated SVD, written into columns [offset, offset + k).
void write_svd_features(const Matrix& m, std::size_t k, std::size_t power_iters,
                        std::uint64_t seed, Matrix& out, std::size_t offset) {
  if (k == 0) return;
  const Svd svd = truncated_svd(m, k, power_iters, seed);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) out(i, offset + j) = svd.u(i, j) * svd.s[j];
}

std::string strip(const std::string& line) {
  const auto hash = line.find('#');
  std::string s = line.substr(0, hash);
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void GraphData::validate() const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [u, v] = edges[i];
    if (u >= n || v >= n) throw ValidationError("edge endpoint out of range");
    if (u == v) throw ValidationError("self-loop at node " + std::to_string(u));
    if (u > v) throw ValidationError("edge not oriented u < v");
    if (i > 0 && !(edges[i - 1] < edges[i])) {
      throw ValidationError("edges unsorted or duplicated near (" + std::to_string(u) +
                            ", " + std::to_string(v) + ")");
    }
  }
  if (node_labels && node_labels->size() != n) {
    throw ValidationError("node label count differs from n");
  }
  if (node_features && node_features->rows() != n) {
    throw ValidationError("node feature rows differ from n");
  }
}

bool GraphData::has_edge(std::size_t u, std::size_t v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges.begin(), edges.end(), Edge{u, v});
}

GraphData make_graph(std::size_t n, std::vector<Edge> edges) {
  for (auto& [u, v] : edges)
    if (u > v) std::swap(u, v);
  std::sort(edges.begin(), edges.end());
  GraphData g;
  g.n = n;
  g.edges = std::move(edges);
  g.validate();
  return g;
}

GraphData generate_sbm(std::size_t n, const std::vector<std::size_t>& block_sizes,
                       double p_in, double p_out, std::uint64_t seed) {
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
    throw ParameterError("generate_sbm: need 0 <= p_out <= p_in <= 1");
  }
  std::size_t total = 0;
  for (std::size_t b : block_sizes) total += b;
  if (total != n) throw ParameterError("generate_sbm: block sizes do not sum to n");

  std::vector<std::size_t> block(n);
  for (std::size_t b = 0, v = 0; b < block_sizes.size(); ++b)
    for (std::size_t i = 0; i < block_sizes[b]; ++i) block[v++] = b;

  Rng rng(seed);
  std::uniform_real_distribution<double> uniform;
  GraphData g;
  g.n = n;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (uniform(rng) < (block[u] == block[v] ? p_in : p_out)) g.edges.emplace_back(u, v);
  g.node_labels = std::move(block);
  return g;
}

Matrix sym_normalize(const GraphData& g) {
  std::vector<double> degree(g.n, 0.0);
  for (const auto& [u, v] : g.edges) {
    degree[u] += 1.0;
    degree[v] += 1.0;
  }
  Matrix a(g.n, g.n);
  for (const auto& [u, v] : g.edges) {
    const double w = 1.0 / std::sqrt(degree[u] * degree[v]);
    a(u, v) = w;
    a(v, u) = w;
  }
  return a;
}

Matrix align_features(const GraphData& g, std::size_t d_target,
                      std::size_t power_iters, std::uint64_t seed) {
  if (d_target == 0 || d_target > g.n) {
    throw ParameterError("align_features: d_target must lie in [1, n]");
  }
  const Matrix a = sym_normalize(g);
  Matrix out(g.n, d_target);
  if (!g.node_features) {
    write_svd_features(a, d_target, power_iters, seed, out, 0);
    return out;
  }
  const Matrix& x = *g.node_features;
  if (x.rows() != g.n) throw ParameterError("align_features: feature rows differ from n");
  const std::size_t d_feat = d_target / 2;
  const std::size_t d_struct = d_target - d_feat;
  write_svd_features(a, d_struct, power_iters, seed, out, 0);
  const std::size_t k = std::min({d_feat, x.rows(), x.cols()});
  write_svd_features(x, k, power_iters, seed + 1, out, d_struct);
  return out;
}

HopStack hop_stack(const Matrix& x0, const Matrix& a_norm, std::size_t ell) {
  if (a_norm.rows() != a_norm.cols() || a_norm.cols() != x0.rows()) {
    throw ParameterError("hop_stack: adjacency and feature shapes do not match");
  }
  HopStack stack;
  stack.hops.reserve(ell + 1);
  stack.hops.push_back(x0);
  for (std::size_t k = 1; k <= ell; ++k) stack.hops.push_back(matmul(a_norm, stack.hops.back()));
  return stack;
}

GraphData read_graph(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  std::optional<std::size_t> n;
  std::vector<Edge> edges;
  std::optional<std::vector<std::size_t>> labels;
  auto fail = [&](const std::string& what) {
    throw FormatError("graph file line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip(raw);
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (!n) {
      std::string key;
      long long count = -1;
      ss >> key >> count;
      if (key != "n" || ss.fail() || count < 0 || !(ss >> std::ws).eof()) {
        fail("expected 'n <count>'");
      }
      n = static_cast<std::size_t>(count);
      continue;
    }
    if (line == "labels") {
      if (labels) fail("duplicate labels section");
      labels.emplace();
      continue;
    }
    long long a = -1, b = -1;
    if (labels) {
      ss >> a;
      if (ss.fail() || a < 0 || !(ss >> std::ws).eof()) fail("expected a class id");
      labels->push_back(static_cast<std::size_t>(a));
      continue;
    }
    ss >> a >> b;
    if (ss.fail() || a < 0 || b < 0 || !(ss >> std::ws).eof()) fail("expected 'u v'");
    if (static_cast<std::size_t>(a) >= *n || static_cast<std::size_t>(b) >= *n) {
      fail("node id out of range");
    }
    if (a == b) fail("self-loop");
    edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  if (!n) throw FormatError("graph file: missing 'n <count>' header");
  for (auto& [u, v] : edges)
    if (u > v) std::swap(u, v);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  GraphData g;
  g.n = *n;
  g.edges = std::move(edges);
  if (labels) {
    if (labels->size() != *n) {
      throw FormatError("graph file: labels section has " + std::to_string(labels->size()) +
                        " entries for " + std::to_string(*n) + " nodes");
    }
    g.node_labels = std::move(labels);
  }
  return g;
}

GraphData read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open graph file: " + path);
  return read_graph(in);
}

void write_graph(std::ostream& out, const GraphData& g) {
  out << "n " << g.n << '\n';
  for (const auto& [u, v] : g.edges) out << u << ' ' << v << '\n';
  if (g.node_labels) {
    out << "labels\n";
    for (std::size_t l : *g.node_labels) out << l << '\n';
  }
}

}  // namespace rlab

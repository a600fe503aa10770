#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "walkprop/matrix.hpp"

namespace walkprop {

// A subgraph as a sorted, deduplicated set of node indices.
class NodeSet {
 public:
  NodeSet() = default;

  explicit NodeSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  }

  static NodeSet full(std::size_t num_nodes) {
    std::vector<std::size_t> v(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) v[i] = i;
    return NodeSet(std::move(v));
  }

  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }
  const std::vector<std::size_t>& indices() const { return indices_; }

  bool contains(std::size_t node) const {
    return std::binary_search(indices_.begin(), indices_.end(), node);
  }

  NodeSet complement(std::size_t num_nodes) const {
    std::vector<std::size_t> v;
    v.reserve(num_nodes - indices_.size());
    for (std::size_t i = 0; i < num_nodes; ++i)
      if (!contains(i)) v.push_back(i);
    return NodeSet(std::move(v));
  }

  NodeSet with(std::size_t node) const {
    std::vector<std::size_t> v = indices_;
    v.push_back(node);
    return NodeSet(std::move(v));
  }

  NodeSet united(const NodeSet& other) const {
    std::vector<std::size_t> v = indices_;
    v.insert(v.end(), other.indices_.begin(), other.indices_.end());
    return NodeSet(std::move(v));
  }

  bool intersects(const NodeSet& other) const {
    for (std::size_t n : other.indices_)
      if (contains(n)) return true;
    return false;
  }

  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  friend bool operator==(const NodeSet& a, const NodeSet& b) { return a.indices_ == b.indices_; }

 private:
  std::vector<std::size_t> indices_;
};

// An ordered node sequence (m_0, ..., m_L), one node per layer transition.
using Walk = std::vector<std::size_t>;

// Undirected graph with per-node input features. The stored adjacency is
// symmetric with a zero diagonal; self-loops enter only through the
// normalization schemes.
struct Graph {
  std::size_t num_nodes = 0;
  Matrix adjacency;          // num_nodes x num_nodes, entries in {0,1}
  Matrix features;           // num_nodes x feature_dim
  std::optional<int> label;
  std::optional<NodeSet> motif_nodes;

  static Graph from_edges(std::size_t num_nodes,
                          const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                          Matrix features) {
    if (features.rows() != num_nodes)
      throw ShapeError("Graph: features rows != num_nodes");
    Graph g;
    g.num_nodes = num_nodes;
    g.adjacency = Matrix(num_nodes, num_nodes);
    g.features = std::move(features);
    for (const auto& [u, v] : edges) {
      if (u >= num_nodes || v >= num_nodes)
        throw ArgumentError("Graph: edge endpoint out of range");
      if (u == v) continue;
      g.adjacency(u, v) = 1.0;
      g.adjacency(v, u) = 1.0;
    }
    return g;
  }

  std::vector<std::pair<std::size_t, std::size_t>> edge_list() const {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < num_nodes; ++u)
      for (std::size_t v = u + 1; v < num_nodes; ++v)
        if (adjacency(u, v) != 0.0) edges.emplace_back(u, v);
    return edges;
  }

  std::size_t num_edges() const { return edge_list().size(); }

  std::size_t feature_dim() const { return features.cols(); }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes == b.num_nodes && a.adjacency == b.adjacency &&
           a.features == b.features && a.label == b.label && a.motif_nodes == b.motif_nodes;
  }
};

struct Dataset {
  std::vector<Graph> graphs;
  std::string name;
  std::size_t feature_dim = 0;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.graphs == b.graphs && a.name == b.name && a.feature_dim == b.feature_dim;
  }
};

enum class AdjacencyScheme { gcn_sym, gin_sum };

inline std::string to_string(AdjacencyScheme s) {
  return s == AdjacencyScheme::gcn_sym ? "gcn_sym" : "gin_sum";
}

inline AdjacencyScheme adjacency_scheme_from_string(const std::string& s) {
  if (s == "gcn_sym") return AdjacencyScheme::gcn_sym;
  if (s == "gin_sum") return AdjacencyScheme::gin_sum;
  throw ParseError("unknown adjacency scheme \"" + s + "\"");
}

// gcn_sym: D^{-1/2} (A+I) D^{-1/2} with D the degree matrix of A+I.
// gin_sum: A+I.
inline Matrix normalize_adjacency(const Graph& g, AdjacencyScheme scheme) {
  const std::size_t m = g.num_nodes;
  Matrix lambda = g.adjacency;
  for (std::size_t i = 0; i < m; ++i) lambda(i, i) += 1.0;
  if (scheme == AdjacencyScheme::gin_sum) return lambda;

  std::vector<double> inv_sqrt_deg(m);
  for (std::size_t i = 0; i < m; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < m; ++j) deg += lambda(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) lambda(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
  return lambda;
}

// Graph surgery used when evaluating a model on a node subset: features of
// nodes outside the set are zeroed and edges touching them removed; the
// label and node count stay.
inline Graph induced_subgraph(const Graph& g, const NodeSet& keep) {
  Graph out = g;
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    if (keep.contains(i)) continue;
    for (std::size_t j = 0; j < g.feature_dim(); ++j) out.features(i, j) = 0.0;
    for (std::size_t j = 0; j < g.num_nodes; ++j) {
      out.adjacency(i, j) = 0.0;
      out.adjacency(j, i) = 0.0;
    }
  }
  return out;
}

// Relabels nodes: node i of the result is node perm[i] of the input.
inline Graph permute_graph(const Graph& g, const std::vector<std::size_t>& perm) {
  Graph out = g;
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    for (std::size_t j = 0; j < g.num_nodes; ++j)
      out.adjacency(i, j) = g.adjacency(perm[i], perm[j]);
    for (std::size_t j = 0; j < g.feature_dim(); ++j)
      out.features(i, j) = g.features(perm[i], j);
  }
  return out;
}

}  // namespace walkprop

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "walkprop/graph.hpp"
#include "walkprop/rng.hpp"

namespace walkprop {

// Synthetic two-motif benchmark: a Barabasi-Albert base graph with one of two
// 5-node motifs bridged to it. The motif determines the class: house -> 0,
// five-cycle -> 1. Node features are the constant 1 (input dimension 1).
struct Ba2MotifConfig {
  std::size_t base_nodes = 20;
  std::size_t attach_edges = 1;  // preferential-attachment edges per new node
  std::size_t motif_nodes = 5;
};

namespace detail {

// Preferential attachment via the repeated-endpoint list: a node with degree
// d appears d times, so a uniform draw lands on it with probability d / 2|E|.
inline std::vector<std::pair<std::size_t, std::size_t>> barabasi_albert_edges(
    std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> endpoints;
  for (std::size_t v = 1; v < n; ++v) {
    std::vector<std::size_t> targets;
    while (targets.size() < std::min(m, v)) {
      std::size_t t;
      if (endpoints.empty())
        t = rng.uniform_int(v);
      else
        t = endpoints[rng.uniform_int(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (std::size_t t : targets) {
      edges.emplace_back(v, t);
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }
  return edges;
}

inline std::vector<std::pair<std::size_t, std::size_t>> house_motif(std::size_t base) {
  // square 0-1-2-3 with a roof node 4 over the 0-1 edge
  return {{base + 0, base + 1}, {base + 1, base + 2}, {base + 2, base + 3},
          {base + 3, base + 0}, {base + 0, base + 4}, {base + 1, base + 4}};
}

inline std::vector<std::pair<std::size_t, std::size_t>> cycle_motif(std::size_t base) {
  return {{base + 0, base + 1}, {base + 1, base + 2}, {base + 2, base + 3},
          {base + 3, base + 4}, {base + 4, base + 0}};
}

}  // namespace detail

inline Graph generate_ba2motif_graph(int label, Rng& rng, const Ba2MotifConfig& cfg = {}) {
  const std::size_t total = cfg.base_nodes + cfg.motif_nodes;
  auto edges = detail::barabasi_albert_edges(cfg.base_nodes, cfg.attach_edges, rng);
  auto motif = label == 0 ? detail::house_motif(cfg.base_nodes) : detail::cycle_motif(cfg.base_nodes);
  edges.insert(edges.end(), motif.begin(), motif.end());
  // one bridge edge between a random base node and a random motif node
  const std::size_t u = rng.uniform_int(cfg.base_nodes);
  const std::size_t v = cfg.base_nodes + rng.uniform_int(cfg.motif_nodes);
  edges.emplace_back(u, v);

  Graph g = Graph::from_edges(total, edges, Matrix::ones(total, 1));
  g.label = label;
  std::vector<std::size_t> motif_ids;
  for (std::size_t i = cfg.base_nodes; i < total; ++i) motif_ids.push_back(i);
  g.motif_nodes = NodeSet(std::move(motif_ids));
  return g;
}

// First half of the dataset is class 0 (house), second half class 1 (cycle).
inline Dataset generate_ba2motif(std::size_t n_graphs, std::uint64_t seed,
                                 const Ba2MotifConfig& cfg = {}) {
  if (n_graphs % 2 != 0)
    throw ArgumentError("generate_ba2motif: n_graphs must be even for balanced classes");
  Rng rng(seed);
  Dataset ds;
  ds.name = "ba2motif";
  ds.feature_dim = 1;
  ds.graphs.reserve(n_graphs);
  for (std::size_t i = 0; i < n_graphs; ++i)
    ds.graphs.push_back(generate_ba2motif_graph(i < n_graphs / 2 ? 0 : 1, rng, cfg));
  return ds;
}

}  // namespace walkprop

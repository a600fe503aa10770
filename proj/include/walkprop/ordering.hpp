#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "walkprop/lrp.hpp"
#include "walkprop/model.hpp"

namespace walkprop {

enum class OrderingMode { activation, pruning };

inline std::string to_string(OrderingMode m) {
  return m == OrderingMode::activation ? "activation" : "pruning";
}

struct NodeOrdering {
  std::vector<std::size_t> order;  // permutation of 0..M-1, most relevant first
  OrderingMode mode = OrderingMode::activation;
  double alpha = 0.0;
  std::vector<double> scores;  // greedy objective value at each step
};

struct CurveMetrics {
  std::optional<double> auac;
  std::optional<double> aupc;
  std::vector<double> curve;
};

inline std::size_t default_target_class(const Graph& g, const GnnModel& model) {
  if (g.label) return static_cast<std::size_t>(*g.label);
  ForwardTrace t = forward(model, g, 0);
  std::size_t argmax = 0;
  for (std::size_t c = 1; c < t.logits.cols(); ++c)
    if (t.logits(0, c) > t.logits(0, argmax)) argmax = c;
  return argmax;
}

// Greedy node ordering. Activation mode grows the subgraph by the node that
// maximizes R_alpha of the grown set; pruning mode picks the node whose
// removal (together with what is already removed) keeps R_alpha of the rest
// closest to the full-graph relevance. Ties go to the lowest node index.
inline NodeOrdering greedy_order(const GnnModel& model, const Graph& g, const LrpConfig& cfg,
                                 OrderingMode mode,
                                 std::optional<std::size_t> target_class = std::nullopt) {
  cfg.validate();
  const std::size_t m = g.num_nodes;
  const std::size_t target = target_class ? *target_class : default_target_class(g, model);
  ForwardTrace trace = forward(model, g, target);
  LrpContext ctx = make_lrp_context(trace, model, cfg);
  const double r_full = subgraph_relevance_mp(ctx, NodeSet::full(m)).value;

  NodeOrdering out;
  out.mode = mode;
  out.alpha = cfg.alpha;
  std::vector<bool> taken(m, false);
  std::vector<std::size_t> picked;
  picked.reserve(m);
  for (std::size_t step = 0; step < m; ++step) {
    bool have = false;
    std::size_t best_node = 0;
    double best_val = 0.0;
    for (std::size_t cand = 0; cand < m; ++cand) {
      if (taken[cand]) continue;
      std::vector<std::size_t> grown = picked;
      grown.push_back(cand);
      const NodeSet grown_set{std::move(grown)};
      double val;
      if (mode == OrderingMode::activation) {
        val = generalized_relevance_mp(ctx, grown_set).value;
      } else {
        const NodeSet rest = grown_set.complement(m);
        val = std::abs(generalized_relevance_mp(ctx, rest).value - r_full);
      }
      const bool better =
          mode == OrderingMode::activation ? val > best_val : val < best_val;
      if (!have || better) {
        have = true;
        best_node = cand;
        best_val = val;
      }
    }
    taken[best_node] = true;
    picked.push_back(best_node);
    out.order.push_back(best_node);
    out.scores.push_back(best_val);
  }
  return out;
}

// Area under the activation curve: mean class probability over the growing
// node prefixes of the ordering.
inline CurveMetrics auac(const GnnModel& model, const Graph& g, const NodeOrdering& ordering,
                         std::optional<std::size_t> target_class = std::nullopt) {
  if (ordering.order.size() != g.num_nodes)
    throw ArgumentError("auac: ordering does not cover the graph");
  const std::size_t target = target_class ? *target_class : default_target_class(g, model);
  CurveMetrics out;
  std::vector<std::size_t> prefix;
  double total = 0.0;
  for (std::size_t node : ordering.order) {
    prefix.push_back(node);
    const double f = subgraph_class_probability(model, g, NodeSet(prefix), target);
    out.curve.push_back(f);
    total += f;
  }
  out.auac = total / static_cast<double>(g.num_nodes);
  return out;
}

// Area under the pruning curve: mean |f(G minus prefix) - f(G)| over the
// growing removals.
inline CurveMetrics aupc(const GnnModel& model, const Graph& g, const NodeOrdering& ordering,
                         std::optional<std::size_t> target_class = std::nullopt) {
  if (ordering.order.size() != g.num_nodes)
    throw ArgumentError("aupc: ordering does not cover the graph");
  const std::size_t target = target_class ? *target_class : default_target_class(g, model);
  const double f_full =
      subgraph_class_probability(model, g, NodeSet::full(g.num_nodes), target);
  CurveMetrics out;
  std::vector<std::size_t> prefix;
  double total = 0.0;
  for (std::size_t node : ordering.order) {
    prefix.push_back(node);
    const NodeSet rest = NodeSet(prefix).complement(g.num_nodes);
    const double f = std::abs(subgraph_class_probability(model, g, rest, target) - f_full);
    out.curve.push_back(f);
    total += f;
  }
  out.aupc = total / static_cast<double>(g.num_nodes);
  return out;
}

struct MotifDetectionResult {
  double accuracy = 0.0;  // top-|motif| nodes equal the motif set
  double auroc = 0.0;     // macro average of per-graph rank AUROC
};

// Rank-based AUROC of one ordering against a node membership set. The score
// of a node is its inverted rank, so earlier nodes score higher; ranks are
// distinct, so there are no ties to correct for.
inline double ordering_auroc(const NodeOrdering& ordering, const NodeSet& positives) {
  const std::size_t m = ordering.order.size();
  const std::size_t p = positives.size();
  if (p == 0 || p >= m) throw ArgumentError("ordering_auroc: degenerate positive set");
  // rank_sum uses ascending-score ranks 1..M: the node picked last has score
  // 1, the node picked first has score M.
  double rank_sum = 0.0;
  for (std::size_t pos = 0; pos < m; ++pos)
    if (positives.contains(ordering.order[pos])) rank_sum += static_cast<double>(m - pos);
  const double np = static_cast<double>(p);
  const double nn = static_cast<double>(m - p);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline MotifDetectionResult motif_detection(const std::vector<NodeOrdering>& orderings,
                                            const std::vector<NodeSet>& ground_truth) {
  if (orderings.size() != ground_truth.size() || orderings.empty())
    throw ArgumentError("motif_detection: orderings and ground truth sizes differ or empty");
  MotifDetectionResult out;
  for (std::size_t i = 0; i < orderings.size(); ++i) {
    const NodeSet& motif = ground_truth[i];
    if (motif.empty()) throw ArgumentError("motif_detection: missing ground truth motif");
    const std::vector<std::size_t>& order = orderings[i].order;
    if (motif.size() > order.size())
      throw ArgumentError("motif_detection: motif larger than graph");
    NodeSet top(std::vector<std::size_t>(order.begin(), order.begin() + motif.size()));
    if (top == motif) out.accuracy += 1.0;
    out.auroc += ordering_auroc(orderings[i], motif);
  }
  out.accuracy /= static_cast<double>(orderings.size());
  out.auroc /= static_cast<double>(orderings.size());
  return out;
}

}  // namespace walkprop

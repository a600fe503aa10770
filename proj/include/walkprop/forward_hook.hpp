#pragma once

#include <vector>

#include "walkprop/lrp.hpp"
#include "walkprop/model.hpp"
#include "walkprop/tape.hpp"

namespace walkprop {

namespace detail {

struct HookedPass {
  double relevance = 0.0;
  Matrix logits;  // forward values of the hooked pass
};

// One hooked forward pass: every combine sublayer is rewritten as
//   P = X W^,  Q = P (Hadamard) [true_activation / P]_detached
// so that its gradient carries the column-normalized propagation
// coefficients, and every block output is gated by the node mask
//   H = Q (Hadamard) M + [Q]_detached (Hadamard) (1 - M).
// The detached factors are constants taken from the unhooked trace, which
// keeps the forward values of the hooked pass equal to the plain ones.
// The result contracts the input gradient with the mask-weighted features.
inline HookedPass hooked_pass(const GnnModel& model, const Graph& g, const ForwardTrace& trace,
                              const LrpConfig& cfg, const std::vector<double>& node_mask) {
  const std::size_t m = g.num_nodes;
  Tape tape;
  TapeVar h0 = tape.leaf(g.features);
  TapeVar lambda = tape.constant(trace.lambda);

  TapeVar h = h0;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    const InteractionBlock& block = model.blocks[l];
    TapeVar x = tape.matmul(lambda, h);
    Matrix x_true = trace.aggregates[l];
    for (std::size_t s = 0; s < block.sublayers.size(); ++s) {
      const Matrix wup = modified_weights(block.sublayers[s].weight, cfg.gamma);
      const Matrix p_true = matmul(x_true, wup);
      const Matrix& a_true = trace.sub_activations[l][s];
      TapeVar p = tape.matmul(x, tape.constant(wup));
      x = tape.hadamard(p, tape.constant(safe_divide(a_true, p_true, cfg.eps)));
      x_true = a_true;
    }
    // node mask gates the block output; the masked-out share re-enters as a
    // constant so values are preserved while gradients are blocked
    Matrix mask(m, x_true.cols());
    Matrix off(m, x_true.cols());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < x_true.cols(); ++j) {
        mask(i, j) = node_mask[i];
        off(i, j) = x_true(i, j) * (1.0 - node_mask[i]);
      }
    h = tape.add(tape.hadamard(x, tape.constant(std::move(mask))), tape.constant(std::move(off)));
  }

  TapeVar pooled = tape.mean_rows(h);
  Matrix pooled_true = trace.pooled;
  TapeVar hv = pooled;
  for (std::size_t s = 0; s < model.readout.layers.size(); ++s) {
    const Matrix wup = modified_weights(model.readout.layers[s].weight, cfg.gamma);
    const Matrix p_true = matmul(pooled_true, wup);
    const Matrix& a_true = trace.head_activations[s];
    TapeVar p = tape.matmul(hv, tape.constant(wup));
    hv = tape.hadamard(p, tape.constant(safe_divide(a_true, p_true, cfg.eps)));
    pooled_true = a_true;
  }
  Matrix pick(model.output_dim(), 1);
  pick(trace.target_class, 0) = 1.0;
  TapeVar y = tape.matmul(hv, tape.constant(std::move(pick)));

  Matrix grad = tape.grad(y, h0);
  HookedPass out;
  out.logits = tape.value(hv);
  for (std::size_t i = 0; i < m; ++i) {
    if (node_mask[i] == 0.0) continue;
    double dot = 0.0;
    for (std::size_t k = 0; k < g.feature_dim(); ++k) dot += grad(i, k) * g.features(i, k);
    out.relevance += node_mask[i] * dot;
  }
  return out;
}

inline std::vector<double> make_node_mask(std::size_t num_nodes, const NodeSet& subgraph,
                                          double inside, double outside) {
  std::vector<double> mask(num_nodes, outside);
  for (std::size_t node : subgraph) mask[node] = inside;
  return mask;
}

}  // namespace detail

// Subgraph relevance via the hooked forward pass and one gradient
// evaluation. alpha = 0 uses the binary mask in a single pass; alpha > 0
// takes two passes (masks 1/alpha and 0/alpha) and returns their difference,
// which subtracts the walks that never touch the subgraph.
inline RelevanceResult forward_hook_relevance(const GnnModel& model, const Graph& g,
                                              std::size_t target_class, const LrpConfig& cfg,
                                              const NodeSet& subgraph) {
  cfg.validate();
  for (std::size_t node : subgraph)
    if (node >= g.num_nodes)
      throw ArgumentError("forward_hook_relevance: node index out of range");
  ForwardTrace trace = forward(model, g, target_class);

  RelevanceResult res;
  res.rule = AttributionRule::forward_hook;
  res.config = cfg;
  res.subgraph = subgraph;
  res.y = trace.y;
  if (cfg.alpha == 0.0) {
    res.value = detail::hooked_pass(model, g, trace, cfg,
                                    detail::make_node_mask(g.num_nodes, subgraph, 1.0, 0.0))
                    .relevance;
  } else {
    const double r1 = detail::hooked_pass(model, g, trace, cfg,
                                          detail::make_node_mask(g.num_nodes, subgraph, 1.0,
                                                                 cfg.alpha))
                          .relevance;
    const double r2 = detail::hooked_pass(model, g, trace, cfg,
                                          detail::make_node_mask(g.num_nodes, subgraph, 0.0,
                                                                 cfg.alpha))
                          .relevance;
    res.value = r1 - r2;
  }
  return res;
}

// Forward values of the hooked pass under an arbitrary node mask; the hook
// only rewires gradients, so these must match the plain forward logits.
inline Matrix hooked_forward_logits(const GnnModel& model, const Graph& g,
                                    std::size_t target_class, const LrpConfig& cfg,
                                    const std::vector<double>& node_mask) {
  ForwardTrace trace = forward(model, g, target_class);
  return detail::hooked_pass(model, g, trace, cfg, node_mask).logits;
}

}  // namespace walkprop

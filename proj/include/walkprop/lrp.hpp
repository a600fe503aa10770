#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "walkprop/model.hpp"
#include "walkprop/tape.hpp"

namespace walkprop {

struct LrpConfig {
  double gamma = 0.0;  // LRP-gamma weight lift
  double eps = 1e-9;   // denominator stabilizer
  double alpha = 0.0;  // out-of-subgraph discount

  void validate() const {
    if (gamma < 0.0) throw ArgumentError("LrpConfig: gamma must be >= 0");
    if (!(eps > 0.0)) throw ArgumentError("LrpConfig: eps must be > 0");
    if (alpha < 0.0 || alpha > 1.0) throw ArgumentError("LrpConfig: alpha must be in [0,1]");
  }
};

enum class AttributionRule { naive, message_passing, forward_hook };

inline std::string to_string(AttributionRule r) {
  switch (r) {
    case AttributionRule::naive: return "naive";
    case AttributionRule::message_passing: return "mp";
    default: return "forward_hook";
  }
}

struct RelevanceResult {
  double value = 0.0;
  AttributionRule rule = AttributionRule::message_passing;
  LrpConfig config;
  NodeSet subgraph;
  double y = 0.0;  // target logit of the unmodified forward pass
};

// W^ = W + gamma * max(0, W), entry-wise.
inline Matrix modified_weights(const Matrix& w, double gamma) {
  Matrix out = w;
  if (gamma == 0.0) return out;
  for (double& x : out.data())
    if (x > 0.0) x += gamma * x;
  return out;
}

// Precomputed pieces every relevance rule reads: the gamma-lifted weights,
// the column-normalizer denominators (the modified pre-activations, one
// M x out matrix per sublayer), and the node-level relevance of the last
// layer obtained by propagating the target logit through the readout.
//
// Holds views into the trace and model; both must outlive the context.
struct LrpContext {
  const ForwardTrace* trace = nullptr;
  const GnnModel* model = nullptr;
  LrpConfig cfg;
  std::vector<std::vector<Matrix>> wup;        // per block, per sublayer
  std::vector<std::vector<Matrix>> denom;      // per block, per sublayer: input_s * wup
  std::vector<Matrix> head_wup;
  std::vector<Matrix> head_denom;              // 1 x out per head layer
  Matrix node_relevance;                       // M x N^(L): r^(L,m)

  std::size_t depth() const { return model->depth(); }
  std::size_t num_nodes() const { return trace->lambda.rows(); }

  const Matrix& sublayer_input(std::size_t l, std::size_t s) const {
    return s == 0 ? trace->aggregates[l] : trace->sub_activations[l][s - 1];
  }
};

inline LrpContext make_lrp_context(const ForwardTrace& trace, const GnnModel& model,
                                   const LrpConfig& cfg) {
  cfg.validate();
  if (trace.node_activations.size() != model.depth() + 1)
    throw ArgumentError("make_lrp_context: trace does not match model depth");

  LrpContext ctx;
  ctx.trace = &trace;
  ctx.model = &model;
  ctx.cfg = cfg;

  for (std::size_t l = 0; l < model.depth(); ++l) {
    std::vector<Matrix> wups, denoms;
    for (std::size_t s = 0; s < model.blocks[l].sublayers.size(); ++s) {
      Matrix w = modified_weights(model.blocks[l].sublayers[s].weight, cfg.gamma);
      denoms.push_back(matmul(ctx.sublayer_input(l, s), w));
      wups.push_back(std::move(w));
    }
    ctx.wup.push_back(std::move(wups));
    ctx.denom.push_back(std::move(denoms));
  }
  for (std::size_t s = 0; s < model.readout.layers.size(); ++s) {
    Matrix w = modified_weights(model.readout.layers[s].weight, cfg.gamma);
    const Matrix& input = s == 0 ? trace.pooled : trace.head_activations[s - 1];
    ctx.head_denom.push_back(matmul(input, w));
    ctx.head_wup.push_back(std::move(w));
  }

  // Backpropagate the target logit through the readout head, then split the
  // pooled relevance over nodes in proportion to their share of each column.
  const std::size_t n_last = trace.node_activations.back().cols();
  const std::size_t m = trace.lambda.rows();
  std::vector<double> r(trace.logits.cols(), 0.0);
  r[trace.target_class] = trace.y;
  for (std::size_t s = model.readout.layers.size(); s-- > 0;) {
    const Matrix& input = s == 0 ? trace.pooled : trace.head_activations[s - 1];
    const Matrix& w = ctx.head_wup[s];
    const Matrix& dn = ctx.head_denom[s];
    std::vector<double> rin(w.rows(), 0.0);
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double share = r[j] / stabilize(dn(0, j), cfg.eps);
      if (share == 0.0) continue;
      for (std::size_t i = 0; i < w.rows(); ++i) rin[i] += input(0, i) * w(i, j) * share;
    }
    r = std::move(rin);
  }
  const Matrix& h_last = trace.node_activations.back();
  Matrix colsum(1, n_last);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n_last; ++j) colsum(0, j) += h_last(i, j);
  ctx.node_relevance = Matrix(m, n_last);
  for (std::size_t j = 0; j < n_last; ++j) {
    const double share = r[j] / stabilize(colsum(0, j), cfg.eps);
    for (std::size_t i = 0; i < m; ++i) ctx.node_relevance(i, j) = h_last(i, j) * share;
  }
  return ctx;
}

namespace detail {

// Relevance pulled back through sublayer s of block l at a fixed node:
// rin_k = input[node,k] * sum_j wup[k,j] * rout[j] / stab(denom[node,j]).
inline std::vector<double> pull_through_sublayer(const LrpContext& ctx, std::size_t l,
                                                 std::size_t s, std::size_t node,
                                                 const std::vector<double>& rout) {
  const Matrix& w = ctx.wup[l][s];
  const Matrix& dn = ctx.denom[l][s];
  const Matrix& input = ctx.sublayer_input(l, s);
  std::vector<double> rin(w.rows(), 0.0);
  for (std::size_t j = 0; j < w.cols(); ++j) {
    const double share = rout[j] / stabilize(dn(node, j), ctx.cfg.eps);
    if (share == 0.0) continue;
    for (std::size_t k = 0; k < w.rows(); ++k) rin[k] += w(k, j) * share;
  }
  for (std::size_t k = 0; k < w.rows(); ++k) rin[k] *= input(node, k);
  return rin;
}

// Pulls a message at (l+1, node) back through the whole block, stopping just
// short of the aggregate factor: the result w is such that the contribution
// to node m at layer l is Lambda(m, node) * H^(l)[m,:] (Hadamard) w.
inline std::vector<double> pull_to_pre_aggregate(const LrpContext& ctx, std::size_t l,
                                                 std::size_t node, std::vector<double> msg) {
  const std::size_t n_sub = ctx.model->blocks[l].sublayers.size();
  for (std::size_t s = n_sub; s-- > 1;) msg = pull_through_sublayer(ctx, l, s, node, msg);
  // sublayer 0 without the input factor: the aggregate input is
  // Z[node,:] = sum_m Lambda(m,node) H^(l)[m,:], which the caller splits.
  const Matrix& w = ctx.wup[l][0];
  const Matrix& dn = ctx.denom[l][0];
  std::vector<double> out(w.rows(), 0.0);
  for (std::size_t j = 0; j < w.cols(); ++j) {
    const double share = msg[j] / stabilize(dn(node, j), ctx.cfg.eps);
    if (share == 0.0) continue;
    for (std::size_t k = 0; k < w.rows(); ++k) out[k] += w(k, j) * share;
  }
  return out;
}

inline std::vector<double> node_relevance_row(const LrpContext& ctx, std::size_t node) {
  const Matrix& nr = ctx.node_relevance;
  return std::vector<double>(nr.row(node), nr.row(node) + nr.cols());
}

inline double vec_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace detail

// Relevance of a single node walk (m_0, ..., m_L): the backward chain of
// propagation-matrix applications seeded with the readout relevance at m_L.
inline double walk_relevance(const LrpContext& ctx, const Walk& walk) {
  const std::size_t depth = ctx.depth();
  const std::size_t m = ctx.num_nodes();
  if (walk.size() != depth + 1)
    throw ArgumentError("walk_relevance: walk length must be depth+1 = " +
                        std::to_string(depth + 1));
  for (std::size_t node : walk)
    if (node >= m) throw ArgumentError("walk_relevance: node index out of range");

  std::vector<double> msg = detail::node_relevance_row(ctx, walk[depth]);
  for (std::size_t l = depth; l-- > 0;) {
    const std::size_t src = walk[l];
    const std::size_t dst = walk[l + 1];
    std::vector<double> w = detail::pull_to_pre_aggregate(ctx, l, dst, std::move(msg));
    const double lam = ctx.trace->lambda(src, dst);
    const Matrix& h = ctx.trace->node_activations[l];
    std::vector<double> next(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) next[k] = lam * h(src, k) * w[k];
    msg = std::move(next);
  }
  return detail::vec_sum(msg);
}

inline double walk_relevance(const ForwardTrace& trace, const GnnModel& model,
                             const LrpConfig& cfg, const Walk& walk) {
  return walk_relevance(make_lrp_context(trace, model, cfg), walk);
}

constexpr std::uint64_t kDefaultWalkBudget = 1000000;

// Brute-force subgraph relevance: enumerate every walk inside S and sum the
// per-walk relevances. This is the oracle the message-passing rule is tested
// against; it refuses to run past the walk budget.
inline RelevanceResult subgraph_relevance_naive(const LrpContext& ctx, const NodeSet& subgraph,
                                                std::uint64_t walk_budget = kDefaultWalkBudget) {
  const std::size_t depth = ctx.depth();
  for (std::size_t node : subgraph)
    if (node >= ctx.num_nodes())
      throw ArgumentError("subgraph_relevance_naive: node index out of range");

  std::uint64_t count = 1;
  for (std::size_t l = 0; l <= depth; ++l) {
    if (subgraph.size() != 0 && count > walk_budget / subgraph.size() + 1)
      count = walk_budget + 1;
    else
      count *= subgraph.size();
    if (count > walk_budget)
      throw BudgetError("subgraph_relevance_naive: |S|^(L+1) = " + std::to_string(subgraph.size()) +
                        "^" + std::to_string(depth + 1) + " walks exceed budget " +
                        std::to_string(walk_budget));
  }

  RelevanceResult res;
  res.rule = AttributionRule::naive;
  res.config = ctx.cfg;
  res.subgraph = subgraph;
  res.y = ctx.trace->y;
  if (subgraph.empty()) return res;

  Walk walk(depth + 1, subgraph[0]);
  std::vector<std::size_t> odo(depth + 1, 0);
  double total = 0.0;
  while (true) {
    total += walk_relevance(ctx, walk);
    std::size_t pos = 0;
    while (pos <= depth) {
      if (++odo[pos] < subgraph.size()) {
        walk[pos] = subgraph[odo[pos]];
        break;
      }
      odo[pos] = 0;
      walk[pos] = subgraph[0];
      ++pos;
    }
    if (pos > depth) break;
  }
  res.value = total;
  return res;
}

inline RelevanceResult subgraph_relevance_naive(const ForwardTrace& trace, const GnnModel& model,
                                                const LrpConfig& cfg, const NodeSet& subgraph,
                                                std::uint64_t walk_budget = kDefaultWalkBudget) {
  return subgraph_relevance_naive(make_lrp_context(trace, model, cfg), subgraph, walk_budget);
}

// Subgraph relevance in a single backward pass: the walk sum of the naive
// rule, reorganized by distributivity so that messages are pooled over the
// subgraph at every layer. O(L |S|^2 N^2) instead of O(|S|^(L+1)).
inline RelevanceResult subgraph_relevance_mp(const LrpContext& ctx, const NodeSet& subgraph) {
  const std::size_t depth = ctx.depth();
  for (std::size_t node : subgraph)
    if (node >= ctx.num_nodes())
      throw ArgumentError("subgraph_relevance_mp: node index out of range");

  RelevanceResult res;
  res.rule = AttributionRule::message_passing;
  res.config = ctx.cfg;
  res.subgraph = subgraph;
  res.y = ctx.trace->y;
  if (subgraph.empty()) return res;

  std::vector<std::vector<double>> msg;
  msg.reserve(subgraph.size());
  for (std::size_t node : subgraph) msg.push_back(detail::node_relevance_row(ctx, node));

  for (std::size_t l = depth; l-- > 0;) {
    const Matrix& h = ctx.trace->node_activations[l];
    std::vector<std::vector<double>> next(subgraph.size(),
                                          std::vector<double>(h.cols(), 0.0));
    for (std::size_t j = 0; j < subgraph.size(); ++j) {
      const std::size_t dst = subgraph[j];
      std::vector<double> w = detail::pull_to_pre_aggregate(ctx, l, dst, std::move(msg[j]));
      for (std::size_t i = 0; i < subgraph.size(); ++i) {
        const double lam = ctx.trace->lambda(subgraph[i], dst);
        if (lam == 0.0) continue;
        std::vector<double>& acc = next[i];
        const double* hrow = h.row(subgraph[i]);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += lam * hrow[k] * w[k];
      }
    }
    msg = std::move(next);
  }
  double total = 0.0;
  for (const auto& v : msg) total += detail::vec_sum(v);
  res.value = total;
  return res;
}

inline RelevanceResult subgraph_relevance_mp(const ForwardTrace& trace, const GnnModel& model,
                                             const LrpConfig& cfg, const NodeSet& subgraph) {
  return subgraph_relevance_mp(make_lrp_context(trace, model, cfg), subgraph);
}

// The alpha-weighted walk sum over the whole graph: every transition into a
// node outside S is discounted by alpha, as is a start outside S.
inline double generalized_relevance_tilde_mp(const LrpContext& ctx, const NodeSet& subgraph) {
  const std::size_t depth = ctx.depth();
  const std::size_t m = ctx.num_nodes();
  const double alpha = ctx.cfg.alpha;

  std::vector<std::vector<double>> msg;
  msg.reserve(m);
  for (std::size_t node = 0; node < m; ++node) msg.push_back(detail::node_relevance_row(ctx, node));

  for (std::size_t l = depth; l-- > 0;) {
    const Matrix& h = ctx.trace->node_activations[l];
    std::vector<std::vector<double>> next(m, std::vector<double>(h.cols(), 0.0));
    for (std::size_t dst = 0; dst < m; ++dst) {
      const double weight = subgraph.contains(dst) ? 1.0 : alpha;
      if (weight == 0.0) continue;
      std::vector<double> scaled = msg[dst];
      if (weight != 1.0)
        for (double& x : scaled) x *= weight;
      std::vector<double> w = detail::pull_to_pre_aggregate(ctx, l, dst, std::move(scaled));
      for (std::size_t src = 0; src < m; ++src) {
        const double lam = ctx.trace->lambda(src, dst);
        if (lam == 0.0) continue;
        std::vector<double>& acc = next[src];
        const double* hrow = h.row(src);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += lam * hrow[k] * w[k];
      }
    }
    msg = std::move(next);
  }
  double total = 0.0;
  for (std::size_t node = 0; node < m; ++node) {
    const double weight = subgraph.contains(node) ? 1.0 : alpha;
    if (weight == 0.0) continue;
    total += weight * detail::vec_sum(msg[node]);
  }
  return total;
}

// Generalized subgraph relevance R_alpha^S: the tilde sum minus the
// alpha^(L+1)-weighted relevance of the complement, which removes the walks
// that never touch S.
inline RelevanceResult generalized_relevance_mp(const LrpContext& ctx, const NodeSet& subgraph) {
  const double alpha = ctx.cfg.alpha;
  RelevanceResult res;
  res.rule = AttributionRule::message_passing;
  res.config = ctx.cfg;
  res.subgraph = subgraph;
  res.y = ctx.trace->y;
  if (alpha == 0.0) {
    res.value = subgraph_relevance_mp(ctx, subgraph).value;
    return res;
  }
  const double tilde = generalized_relevance_tilde_mp(ctx, subgraph);
  double discount = 1.0;
  for (std::size_t l = 0; l <= ctx.depth(); ++l) discount *= alpha;
  const NodeSet rest = subgraph.complement(ctx.num_nodes());
  res.value = tilde - discount * subgraph_relevance_mp(ctx, rest).value;
  return res;
}

inline RelevanceResult generalized_relevance_mp(const ForwardTrace& trace, const GnnModel& model,
                                                const LrpConfig& cfg, const NodeSet& subgraph) {
  return generalized_relevance_mp(make_lrp_context(trace, model, cfg), subgraph);
}

// Interaction relevance of a collection of disjoint cells: inclusion-
// exclusion over all sub-collections, so that joint contributions are
// separated from what the parts already explain.
inline double interaction_relevance(const LrpContext& ctx,
                                    const std::map<std::string, NodeSet>& partition,
                                    const std::vector<std::string>& subset) {
  std::vector<const NodeSet*> cells;
  for (const std::string& label : subset) {
    auto it = partition.find(label);
    if (it == partition.end())
      throw ArgumentError("interaction_relevance: unknown cell \"" + label + "\"");
    cells.push_back(&it->second);
  }
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = i + 1; j < cells.size(); ++j)
      if (cells[i]->intersects(*cells[j]))
        throw ArgumentError("interaction_relevance: cells overlap");
  if (cells.size() > 20) throw ArgumentError("interaction_relevance: too many cells");

  double total = 0.0;
  const std::size_t n = cells.size();
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    NodeSet u;
    std::size_t picked = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (bits & (1u << i)) {
        u = u.united(*cells[i]);
        ++picked;
      }
    const double sign = ((n - picked) % 2 == 0) ? 1.0 : -1.0;
    total += sign * subgraph_relevance_mp(ctx, u).value;
  }
  return total;
}

inline double interaction_relevance(const ForwardTrace& trace, const GnnModel& model,
                                    const LrpConfig& cfg,
                                    const std::map<std::string, NodeSet>& partition,
                                    const std::vector<std::string>& subset) {
  return interaction_relevance(make_lrp_context(trace, model, cfg), partition, subset);
}

// All propagation matrices T^(l,m,m') materialized as dense blocks, sublayer
// factors composed per block. Intended for small instances: the tests that
// check column normalization and hand-expanded walk products read these.
struct PropagationMatrices {
  std::size_t depth = 0;
  std::size_t num_nodes = 0;
  std::vector<Matrix> entries;  // (l * M + m) * M + m'

  const Matrix& at(std::size_t l, std::size_t m_from, std::size_t m_to) const {
    return entries[(l * num_nodes + m_from) * num_nodes + m_to];
  }
};

inline PropagationMatrices build_propagation_matrices(const LrpContext& ctx) {
  PropagationMatrices pm;
  pm.depth = ctx.depth();
  pm.num_nodes = ctx.num_nodes();
  pm.entries.reserve(pm.depth * pm.num_nodes * pm.num_nodes);
  for (std::size_t l = 0; l < pm.depth; ++l) {
    const Matrix& h = ctx.trace->node_activations[l];
    const std::size_t n_in = h.cols();
    const std::size_t n_sub = ctx.model->blocks[l].sublayers.size();
    for (std::size_t src = 0; src < pm.num_nodes; ++src) {
      for (std::size_t dst = 0; dst < pm.num_nodes; ++dst) {
        const double lam = ctx.trace->lambda(src, dst);
        // first factor: aggregate coupling, input split over source nodes
        const Matrix& w0 = ctx.wup[l][0];
        Matrix t(n_in, w0.cols());
        if (lam != 0.0)
          for (std::size_t n = 0; n < n_in; ++n)
            for (std::size_t j = 0; j < w0.cols(); ++j)
              t(n, j) = lam * h(src, n) * w0(n, j) / stabilize(ctx.denom[l][0](dst, j), ctx.cfg.eps);
        // remaining sublayers couple neurons at the fixed destination node
        for (std::size_t s = 1; s < n_sub; ++s) {
          const Matrix& ws = ctx.wup[l][s];
          const Matrix& input = ctx.sublayer_input(l, s);
          Matrix f(ws.rows(), ws.cols());
          for (std::size_t k = 0; k < ws.rows(); ++k)
            for (std::size_t j = 0; j < ws.cols(); ++j)
              f(k, j) = input(dst, k) * ws(k, j) / stabilize(ctx.denom[l][s](dst, j), ctx.cfg.eps);
          t = matmul(t, f);
        }
        pm.entries.push_back(std::move(t));
      }
    }
  }
  return pm;
}

inline PropagationMatrices build_propagation_matrices(const ForwardTrace& trace,
                                                      const GnnModel& model,
                                                      const LrpConfig& cfg) {
  return build_propagation_matrices(make_lrp_context(trace, model, cfg));
}

// Gradient x input node scores through the plain (unhooked) model.
inline std::vector<double> gradient_heatmap(const GnnModel& model, const Graph& g,
                                            std::size_t target_class) {
  Tape tape;
  TapeVar h0 = tape.leaf(g.features);
  TapeVar lambda = tape.constant(normalize_adjacency(g, model.adjacency_scheme));
  TapeVar h = h0;
  auto apply = [&](const Sublayer& s, TapeVar x) {
    TapeVar z = tape.matmul(x, tape.constant(s.weight));
    if (s.bias) z = tape.add(z, tape.constant(*s.bias));
    return s.act == Activation::relu ? tape.relu(z) : z;
  };
  for (const auto& b : model.blocks) {
    TapeVar x = tape.matmul(lambda, h);
    for (const auto& s : b.sublayers) x = apply(s, x);
    h = x;
  }
  TapeVar pooled = tape.mean_rows(h);
  for (const auto& s : model.readout.layers) pooled = apply(s, pooled);
  Matrix pick(model.output_dim(), 1);
  pick(target_class, 0) = 1.0;
  TapeVar y = tape.matmul(pooled, tape.constant(std::move(pick)));
  Matrix grad = tape.grad(y, h0);

  std::vector<double> scores(g.num_nodes, 0.0);
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::size_t k = 0; k < g.feature_dim(); ++k) scores[i] += grad(i, k) * g.features(i, k);
  return scores;
}

}  // namespace walkprop

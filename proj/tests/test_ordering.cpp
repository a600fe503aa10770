#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "test_support.hpp"
#include "walkprop/ba2motif.hpp"
#include "walkprop/ordering.hpp"

using namespace walkprop;
using wptest::close;

namespace {

bool is_permutation_of_all(const std::vector<std::size_t>& order, std::size_t m) {
  if (order.size() != m) return false;
  std::vector<bool> seen(m, false);
  for (std::size_t v : order) {
    if (v >= m || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

// model whose output ignores the graph entirely: zero weights, bias head
GnnModel constant_model(double logit0, double logit1) {
  GnnModel m;
  InteractionBlock b;
  b.kind = BlockKind::gcn;
  b.sublayers.push_back({Matrix(1, 4), std::nullopt, Activation::relu});
  m.blocks.push_back(b);
  Sublayer head{Matrix(4, 2), Matrix{{logit0, logit1}}, Activation::identity};
  m.readout.layers.push_back(head);
  m.adjacency_scheme = AdjacencyScheme::gcn_sym;
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("greedy orderings are permutations in both modes") {
  for (auto mode : {OrderingMode::activation, OrderingMode::pruning}) {
    wptest::InstanceSpec spec;
    spec.num_nodes = 6;
    spec.kind = BlockKind::gin;
    wptest::Instance inst = wptest::make_instance(spec, 3100);
    NodeOrdering ord = greedy_order(inst.model, inst.graph, inst.cfg, mode, 0);
    CHECK(is_permutation_of_all(ord.order, 6));
    CHECK(ord.scores.size() == 6);
    CHECK(ord.mode == mode);
  }
}

TEST_CASE("first activation pick matches the exhaustive singleton argmax") {
  wptest::InstanceSpec spec;
  spec.num_nodes = 4;
  spec.depth = 2;
  spec.alpha = 0.25;
  wptest::Instance inst = wptest::make_instance(spec, 3200);
  ForwardTrace t = forward(inst.model, inst.graph, 0);
  LrpContext ctx = make_lrp_context(t, inst.model, inst.cfg);

  std::size_t best = 0;
  double best_val = -1e300;
  for (std::size_t m = 0; m < 4; ++m) {
    const double val =
        generalized_relevance_mp(ctx, NodeSet(std::vector<std::size_t>{m})).value;
    if (val > best_val) {
      best_val = val;
      best = m;
    }
  }
  NodeOrdering ord = greedy_order(inst.model, inst.graph, inst.cfg, OrderingMode::activation, 0);
  CHECK(ord.order[0] == best);
  CHECK(ord.scores[0] == best_val);
}

TEST_CASE("greedy certificate: every pick is optimal at its step") {
  for (auto mode : {OrderingMode::activation, OrderingMode::pruning}) {
    wptest::InstanceSpec spec;
    spec.num_nodes = 5;
    spec.alpha = 0.5;
    spec.kind = BlockKind::gin;
    wptest::Instance inst = wptest::make_instance(spec, 3300);
    const std::size_t target = 1;
    NodeOrdering ord = greedy_order(inst.model, inst.graph, inst.cfg, mode, target);

    ForwardTrace t = forward(inst.model, inst.graph, target);
    LrpContext ctx = make_lrp_context(t, inst.model, inst.cfg);
    const double r_full = subgraph_relevance_mp(ctx, NodeSet::full(5)).value;

    std::vector<std::size_t> prefix;
    std::vector<bool> taken(5, false);
    for (std::size_t step = 0; step < 5; ++step) {
      const std::size_t picked = ord.order[step];
      auto objective = [&](std::size_t cand) {
        std::vector<std::size_t> grown = prefix;
        grown.push_back(cand);
        if (mode == OrderingMode::activation)
          return generalized_relevance_mp(ctx, NodeSet(grown)).value;
        return std::abs(generalized_relevance_mp(ctx, NodeSet(grown).complement(5)).value -
                        r_full);
      };
      const double picked_val = objective(picked);
      for (std::size_t cand = 0; cand < 5; ++cand) {
        if (taken[cand]) continue;
        const double val = objective(cand);
        if (mode == OrderingMode::activation) {
          CHECK(picked_val >= val);
          if (val == picked_val) CHECK(picked <= cand);  // ties break low
        } else {
          CHECK(picked_val <= val);
          if (val == picked_val) CHECK(picked <= cand);
        }
      }
      taken[picked] = true;
      prefix.push_back(picked);
    }
  }
}

TEST_CASE("auac: a constant model gives a flat curve equal to its probability") {
  GnnModel m = constant_model(0.3, -0.2);
  Rng rng(7);
  Graph g = wptest::random_graph(4, 1, 0.5, rng);
  g.label = 0;
  NodeOrdering ord;
  ord.order = {0, 1, 2, 3};
  ord.mode = OrderingMode::activation;
  CurveMetrics cm = auac(m, g, ord);
  REQUIRE(cm.auac.has_value());
  const double c = softmax_row(Matrix{{0.3, -0.2}})[0];
  for (double f : cm.curve) CHECK(close(f, c, 1e-12, 1e-12));
  CHECK(close(*cm.auac, c, 1e-12, 1e-12));

  CurveMetrics pm = aupc(m, g, ord);
  REQUIRE(pm.aupc.has_value());
  CHECK(*pm.aupc == 0.0);  // removals never change a constant model
}

TEST_CASE("auac and aupc are the means of their curves, inside [0,1]") {
  wptest::InstanceSpec spec;
  spec.num_nodes = 2;
  wptest::Instance inst = wptest::make_instance(spec, 3400);
  inst.graph.label = 0;
  NodeOrdering ord;
  ord.order = {1, 0};
  CurveMetrics am = auac(inst.model, inst.graph, ord);
  REQUIRE(am.curve.size() == 2);
  CHECK(close(*am.auac, 0.5 * (am.curve[0] + am.curve[1]), 1e-15, 1e-15));
  CHECK(*am.auac >= 0.0);
  CHECK(*am.auac <= 1.0);

  CurveMetrics pmx = aupc(inst.model, inst.graph, ord);
  REQUIRE(pmx.curve.size() == 2);
  CHECK(close(*pmx.aupc, 0.5 * (pmx.curve[0] + pmx.curve[1]), 1e-15, 1e-15));
  CHECK(*pmx.aupc >= 0.0);
  CHECK(*pmx.aupc <= 1.0);
}

TEST_CASE("motif detection: perfect, reversed and random orderings") {
  const std::size_t m = 25;
  NodeSet motif(std::vector<std::size_t>{3, 7, 11, 19, 24});

  NodeOrdering perfect;
  for (std::size_t v : motif) perfect.order.push_back(v);
  for (std::size_t v = 0; v < m; ++v)
    if (!motif.contains(v)) perfect.order.push_back(v);
  MotifDetectionResult res = motif_detection({perfect}, {motif});
  CHECK(res.accuracy == 1.0);
  CHECK(res.auroc == 1.0);

  NodeOrdering reversed;
  reversed.order.assign(perfect.order.rbegin(), perfect.order.rend());
  res = motif_detection({reversed}, {motif});
  CHECK(res.accuracy == 0.0);
  CHECK(res.auroc == 0.0);

  // uniformly random orderings hover around AUROC 1/2
  Rng rng(3500);
  std::vector<NodeOrdering> orderings(200);
  std::vector<NodeSet> truths(200, motif);
  for (auto& ord : orderings) {
    std::vector<std::size_t> ids(m);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    rng.shuffle(ids);
    ord.order = ids;
  }
  res = motif_detection(orderings, truths);
  CHECK(res.auroc > 0.45);
  CHECK(res.auroc < 0.55);
}

TEST_CASE("motif detection validates input") {
  NodeOrdering ord;
  ord.order = {0, 1, 2};
  CHECK_THROWS_AS(motif_detection({ord}, {NodeSet{}}), ArgumentError);
  CHECK_THROWS_AS(motif_detection({}, {}), ArgumentError);
}

TEST_CASE("subgraph evaluation is invariant under consistent relabeling") {
  wptest::InstanceSpec spec;
  spec.num_nodes = 5;
  spec.kind = BlockKind::gin;
  wptest::Instance inst = wptest::make_instance(spec, 3600);
  const NodeSet s(std::vector<std::size_t>{0, 2, 3});
  std::vector<std::size_t> perm{4, 2, 0, 1, 3};
  Graph pg = permute_graph(inst.graph, perm);
  // node i of pg is node perm[i] of g: membership carries over through perm
  std::vector<std::size_t> mapped;
  for (std::size_t i = 0; i < 5; ++i)
    if (s.contains(perm[i])) mapped.push_back(i);
  const double a = subgraph_class_probability(inst.model, inst.graph, s, 1);
  const double b = subgraph_class_probability(inst.model, pg, NodeSet(mapped), 1);
  CHECK(close(a, b, 1e-12, 1e-12));
}

TEST_CASE("orderings validate coverage") {
  wptest::InstanceSpec spec;
  spec.num_nodes = 3;
  wptest::Instance inst = wptest::make_instance(spec, 3700);
  inst.graph.label = 0;
  NodeOrdering short_ord;
  short_ord.order = {0, 1};
  CHECK_THROWS_AS(auac(inst.model, inst.graph, short_ord), ArgumentError);
  CHECK_THROWS_AS(aupc(inst.model, inst.graph, short_ord), ArgumentError);
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "walkprop/graph.hpp"
#include "walkprop/matrix.hpp"
#include "walkprop/rng.hpp"

namespace walkprop {

enum class BlockKind { gcn, gin };
enum class Activation { relu, identity };

inline std::string to_string(BlockKind k) { return k == BlockKind::gcn ? "gcn" : "gin"; }
inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

// One dense layer: X -> act(X W + b).
struct Sublayer {
  Matrix weight;                // in_dim x out_dim
  std::optional<Matrix> bias;   // 1 x out_dim
  Activation act = Activation::relu;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }

  Matrix apply(const Matrix& x) const {
    Matrix z = matmul(x, weight);
    if (bias) z = add_rowvec(z, *bias);
    return act == Activation::relu ? relu(z) : z;
  }

  friend bool operator==(const Sublayer& a, const Sublayer& b) {
    return a.weight == b.weight && a.bias == b.bias && a.act == b.act;
  }
};

// Interaction block: aggregate Z = Lambda H, then a per-node combine.
// gcn combines with a single perceptron; gin with an MLP (two sublayers in
// the configurations used here).
struct InteractionBlock {
  BlockKind kind = BlockKind::gcn;
  std::vector<Sublayer> sublayers;

  std::size_t in_dim() const { return sublayers.front().in_dim(); }
  std::size_t out_dim() const { return sublayers.back().out_dim(); }

  friend bool operator==(const InteractionBlock& a, const InteractionBlock& b) {
    return a.kind == b.kind && a.sublayers == b.sublayers;
  }
};

// Mean-pool over nodes followed by a dense head producing class logits.
struct ReadoutHead {
  std::vector<Sublayer> layers;

  friend bool operator==(const ReadoutHead& a, const ReadoutHead& b) {
    return a.layers == b.layers;
  }
};

struct GnnModel {
  std::vector<InteractionBlock> blocks;
  ReadoutHead readout;
  AdjacencyScheme adjacency_scheme = AdjacencyScheme::gcn_sym;

  std::size_t depth() const { return blocks.size(); }
  std::size_t input_dim() const { return blocks.front().in_dim(); }
  std::size_t output_dim() const { return readout.layers.back().out_dim(); }

  void validate() const {
    if (blocks.empty()) throw ArgumentError("GnnModel: no interaction blocks");
    if (readout.layers.empty()) throw ArgumentError("GnnModel: empty readout head");
    for (const auto& b : blocks) {
      if (b.sublayers.empty()) throw ArgumentError("GnnModel: block without sublayers");
      if (b.kind == BlockKind::gcn && b.sublayers.size() != 1)
        throw ArgumentError("GnnModel: gcn block must have exactly one sublayer");
      for (std::size_t s = 1; s < b.sublayers.size(); ++s)
        if (b.sublayers[s].in_dim() != b.sublayers[s - 1].out_dim())
          throw ShapeError("GnnModel: sublayer dims do not chain");
    }
    for (std::size_t l = 1; l < blocks.size(); ++l)
      if (blocks[l].in_dim() != blocks[l - 1].out_dim())
        throw ShapeError("GnnModel: block dims do not chain");
    if (readout.layers.front().in_dim() != blocks.back().out_dim())
      throw ShapeError("GnnModel: readout input dim mismatch");
    for (std::size_t s = 1; s < readout.layers.size(); ++s)
      if (readout.layers[s].in_dim() != readout.layers[s - 1].out_dim())
        throw ShapeError("GnnModel: readout dims do not chain");
  }

  friend bool operator==(const GnnModel& a, const GnnModel& b) {
    return a.blocks == b.blocks && a.readout == b.readout &&
           a.adjacency_scheme == b.adjacency_scheme;
  }
};

// Everything one forward pass produces, kept around because every LRP rule
// reads these intermediates.
struct ForwardTrace {
  Matrix lambda;                                   // normalized adjacency
  std::vector<Matrix> node_activations;            // H^(0) .. H^(L), block outputs
  std::vector<Matrix> aggregates;                  // Z per block (Lambda H^(l))
  std::vector<std::vector<Matrix>> sub_activations;  // per block, per sublayer output
  Matrix pooled;                                   // 1 x N^(L)
  std::vector<Matrix> head_activations;            // per head layer output; last = logits
  Matrix logits;
  std::size_t target_class = 0;
  double y = 0.0;  // logit of the target class
};

inline ForwardTrace forward(const GnnModel& model, const Graph& g, std::size_t target_class) {
  if (g.feature_dim() != model.input_dim())
    throw ShapeError("forward: graph feature dim " + std::to_string(g.feature_dim()) +
                     " != model input dim " + std::to_string(model.input_dim()));
  if (target_class >= model.output_dim())
    throw ArgumentError("forward: target class out of range");

  ForwardTrace t;
  t.lambda = normalize_adjacency(g, model.adjacency_scheme);
  t.node_activations.push_back(g.features);
  for (const InteractionBlock& block : model.blocks) {
    Matrix z = matmul(t.lambda, t.node_activations.back());
    t.aggregates.push_back(z);
    std::vector<Matrix> subs;
    Matrix x = std::move(z);
    for (const Sublayer& s : block.sublayers) {
      x = s.apply(x);
      subs.push_back(x);
    }
    t.sub_activations.push_back(std::move(subs));
    t.node_activations.push_back(x);
  }
  t.pooled = mean_rows(t.node_activations.back());
  Matrix h = t.pooled;
  for (const Sublayer& s : model.readout.layers) {
    h = s.apply(h);
    t.head_activations.push_back(h);
  }
  t.logits = t.head_activations.back();
  t.target_class = target_class;
  t.y = t.logits(0, target_class);
  return t;
}

// Class probability of `cls` on the node-induced subgraph, with adjacency
// re-normalized after surgery.
inline double subgraph_class_probability(const GnnModel& model, const Graph& g,
                                         const NodeSet& keep, std::size_t cls) {
  Graph cut = induced_subgraph(g, keep);
  ForwardTrace t = forward(model, cut, cls);
  return softmax_row(t.logits)[cls];
}

struct ModelInit {
  BlockKind kind = BlockKind::gin;
  std::size_t depth = 3;
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 20;
  std::size_t num_classes = 2;
  std::size_t head_layers = 1;  // dense layers after mean pooling
  bool with_bias = false;
  Activation final_block_act = Activation::relu;
};

// Glorot-uniform weights, deterministic in the given rng.
inline Matrix glorot(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  Matrix w(in_dim, out_dim);
  for (double& x : w.data()) x = rng.uniform(-a, a);
  return w;
}

inline GnnModel make_model(const ModelInit& init, Rng& rng) {
  auto make_sublayer = [&](std::size_t in, std::size_t out, Activation act) {
    Sublayer s;
    s.weight = glorot(in, out, rng);
    if (init.with_bias) {
      Matrix b(1, out);
      for (double& x : b.data()) x = rng.uniform(-0.1, 0.1);
      s.bias = std::move(b);
    }
    s.act = act;
    return s;
  };

  GnnModel m;
  m.adjacency_scheme =
      init.kind == BlockKind::gcn ? AdjacencyScheme::gcn_sym : AdjacencyScheme::gin_sum;
  std::size_t in = init.input_dim;
  for (std::size_t l = 0; l < init.depth; ++l) {
    InteractionBlock b;
    b.kind = init.kind;
    const Activation act = l + 1 == init.depth ? init.final_block_act : Activation::relu;
    if (init.kind == BlockKind::gcn) {
      b.sublayers.push_back(make_sublayer(in, init.hidden_dim, act));
    } else {
      b.sublayers.push_back(make_sublayer(in, init.hidden_dim, Activation::relu));
      b.sublayers.push_back(make_sublayer(init.hidden_dim, init.hidden_dim, act));
    }
    in = init.hidden_dim;
    m.blocks.push_back(std::move(b));
  }
  for (std::size_t s = 0; s < init.head_layers; ++s) {
    const bool last = s + 1 == init.head_layers;
    m.readout.layers.push_back(make_sublayer(in, last ? init.num_classes : init.hidden_dim,
                                             last ? Activation::identity : Activation::relu));
    in = last ? init.num_classes : init.hidden_dim;
  }
  m.validate();
  return m;
}

}  // namespace walkprop

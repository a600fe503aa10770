#pragma once

#include <cstdint>
#include <vector>

#include "walkprop/model.hpp"
#include "walkprop/tape.hpp"

namespace walkprop {

struct TrainConfig {
  std::size_t epochs = 150;
  double lr = 0.001;  // schedule: lr / (1 + epoch/epochs)
  std::uint64_t seed = 0;
};

struct TrainResult {
  GnnModel model;
  double initial_epoch_loss = 0.0;
  double final_epoch_loss = 0.0;
};

namespace detail {

// Forward pass on the tape with the model parameters as differentiable
// leaves; returns the cross-entropy loss node.
struct TapedModel {
  Tape tape;
  std::vector<TapeVar> params;  // one leaf per weight / bias, model order

  TapedModel(const GnnModel& model, const Graph& g) {
    for (const auto& b : model.blocks)
      for (const auto& s : b.sublayers) {
        params.push_back(tape.leaf(s.weight));
        if (s.bias) params.push_back(tape.leaf(*s.bias));
      }
    for (const auto& s : model.readout.layers) {
      params.push_back(tape.leaf(s.weight));
      if (s.bias) params.push_back(tape.leaf(*s.bias));
    }

    TapeVar lambda = tape.constant(normalize_adjacency(g, model.adjacency_scheme));
    TapeVar h = tape.constant(g.features);
    std::size_t p = 0;
    auto apply = [&](const Sublayer& s, TapeVar x) {
      TapeVar z = tape.matmul(x, params[p++]);
      if (s.bias) z = tape.add(z, params[p++]);
      return s.act == Activation::relu ? tape.relu(z) : z;
    };
    for (const auto& b : model.blocks) {
      TapeVar x = tape.matmul(lambda, h);
      for (const auto& s : b.sublayers) x = apply(s, x);
      h = x;
    }
    TapeVar pooled = tape.mean_rows(h);
    for (const auto& s : model.readout.layers) pooled = apply(s, pooled);
    logits = pooled;
  }

  TapeVar logits;
};

}  // namespace detail

// Plain per-graph SGD with a decreasing learning rate. Deterministic in the
// seed: the per-epoch shuffle and parameter updates use no other entropy.
inline TrainResult train_sgd(GnnModel model, const Dataset& train, const TrainConfig& cfg) {
  if (train.graphs.empty()) throw ArgumentError("train_sgd: empty dataset");
  if (model.output_dim() != 2) throw ArgumentError("train_sgd: model output dim must be 2");
  for (const Graph& g : train.graphs)
    if (!g.label || (*g.label != 0 && *g.label != 1))
      throw ArgumentError("train_sgd: dataset labels must be binary");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train.graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        cfg.lr / (1.0 + static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const Graph& g = train.graphs[idx];
      detail::TapedModel taped(model, g);
      TapeVar loss = taped.tape.softmax_cross_entropy(taped.logits, std::size_t(*g.label));
      epoch_loss += taped.tape.value(loss)(0, 0);
      if (lr == 0.0) continue;
      std::vector<Matrix> grads = taped.tape.gradients(loss, taped.params);
      std::size_t p = 0;
      auto update = [&](Matrix& w) {
        const Matrix& grad = grads[p++];
        for (std::size_t k = 0; k < w.size(); ++k) w.data()[k] -= lr * grad.data()[k];
      };
      for (auto& b : model.blocks)
        for (auto& s : b.sublayers) {
          update(s.weight);
          if (s.bias) update(*s.bias);
        }
      for (auto& s : model.readout.layers) {
        update(s.weight);
        if (s.bias) update(*s.bias);
      }
    }
    epoch_loss /= static_cast<double>(train.graphs.size());
    if (epoch == 0) result.initial_epoch_loss = epoch_loss;
    result.final_epoch_loss = epoch_loss;
  }
  result.model = std::move(model);
  return result;
}

// Fraction of graphs whose argmax logit matches the label.
inline double accuracy(const GnnModel& model, const Dataset& ds) {
  if (ds.graphs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Graph& g : ds.graphs) {
    ForwardTrace t = forward(model, g, 0);
    std::size_t argmax = 0;
    for (std::size_t c = 1; c < t.logits.cols(); ++c)
      if (t.logits(0, c) > t.logits(0, argmax)) argmax = c;
    if (g.label && static_cast<int>(argmax) == *g.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.graphs.size());
}

}  // namespace walkprop

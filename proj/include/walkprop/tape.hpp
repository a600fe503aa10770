#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "walkprop/matrix.hpp"

namespace walkprop {

// Minimal reverse-mode differentiation tape. The one feature that earns it a
// place here is detach(): it freezes a computed value as a constant for
// differentiation while keeping the forward value byte-identical, which is
// what the hooked combine step needs.
//
// A tape is append-only and single-threaded within one attribution call.
class Tape {
 public:
  struct Var {
    int idx = -1;
  };

  enum class Op {
    leaf,
    constant,
    matmul,
    add,
    add_rowvec,
    hadamard,
    safe_divide,
    relu,
    mean_rows,
    sum,
    scale,
    detach,
    softmax_cross_entropy,
  };

  Var leaf(Matrix value) { return push(Op::leaf, {-1, -1}, std::move(value)); }

  Var constant(Matrix value) { return push(Op::constant, {-1, -1}, std::move(value)); }

  Var matmul(Var a, Var b) {
    return push(Op::matmul, {a.idx, b.idx}, walkprop::matmul(val(a), val(b)));
  }

  // Same-shape add, or row-broadcast add when b is 1 x N.
  Var add(Var a, Var b) {
    const Matrix& mb = val(b);
    if (mb.rows() == 1 && val(a).rows() != 1)
      return push(Op::add_rowvec, {a.idx, b.idx}, walkprop::add_rowvec(val(a), mb));
    return push(Op::add, {a.idx, b.idx}, walkprop::add(val(a), mb));
  }

  Var hadamard(Var a, Var b) {
    return push(Op::hadamard, {a.idx, b.idx}, walkprop::hadamard(val(a), val(b)));
  }

  Var safe_divide(Var a, Var b, double eps) {
    Var v = push(Op::safe_divide, {a.idx, b.idx}, walkprop::safe_divide(val(a), val(b), eps));
    nodes_[v.idx].eps = eps;
    return v;
  }

  Var relu(Var a) { return push(Op::relu, {a.idx, -1}, walkprop::relu(val(a))); }

  Var mean_rows(Var a) { return push(Op::mean_rows, {a.idx, -1}, walkprop::mean_rows(val(a))); }

  Var sum(Var a) {
    Matrix s(1, 1);
    s(0, 0) = walkprop::sum(val(a));
    return push(Op::sum, {a.idx, -1}, std::move(s));
  }

  Var scale(Var a, double s) {
    Var v = push(Op::scale, {a.idx, -1}, walkprop::scale(val(a), s));
    nodes_[v.idx].scalar = s;
    return v;
  }

  // Forward value passes through unchanged; no gradient flows back.
  Var detach(Var a) {
    Var v = push(Op::detach, {a.idx, -1}, val(a));
    nodes_[v.idx].detached = true;
    return v;
  }

  // logits: 1 x C, loss = log-sum-exp(logits) - logits[label].
  Var softmax_cross_entropy(Var logits, std::size_t label) {
    const Matrix& lg = val(logits);
    if (lg.rows() != 1) throw ShapeError("softmax_cross_entropy: logits must be 1 x C");
    if (label >= lg.cols()) throw ArgumentError("softmax_cross_entropy: label out of range");
    double mx = lg(0, 0);
    for (std::size_t j = 1; j < lg.cols(); ++j) mx = std::max(mx, lg(0, j));
    double z = 0.0;
    for (std::size_t j = 0; j < lg.cols(); ++j) z += std::exp(lg(0, j) - mx);
    Matrix loss(1, 1);
    loss(0, 0) = mx + std::log(z) - lg(0, label);
    Var v = push(Op::softmax_cross_entropy, {logits.idx, -1}, std::move(loss));
    nodes_[v.idx].label = label;
    return v;
  }

  const Matrix& value(Var v) const { return nodes_[v.idx].value; }

  // d(output)/d(wrt). output must be scalar (1 x 1). A wrt that is not an
  // ancestor of output yields an all-zero matrix of wrt's shape.
  Matrix grad(Var output, Var wrt) const {
    return gradients(output, std::vector<Var>{wrt})[0];
  }

  // Single backward pass, adjoints for several variables at once.
  std::vector<Matrix> gradients(Var output, const std::vector<Var>& wrts) const {
    const Matrix& out = val(output);
    if (out.rows() != 1 || out.cols() != 1)
      throw ShapeError("grad: output must be scalar, got " + shape_str(out));

    Adjoints adj(nodes_.size());
    adj.add(output.idx, Matrix(1, 1, 1.0));

    for (int i = output.idx; i >= 0; --i) {
      if (!adj.live[i]) continue;
      backprop_node(i, adj);
    }

    std::vector<Matrix> result;
    result.reserve(wrts.size());
    for (Var w : wrts) {
      if (adj.live[w.idx])
        result.push_back(std::move(adj.grad[w.idx]));
      else
        result.push_back(Matrix(val(w).rows(), val(w).cols()));
    }
    return result;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    std::array<int, 2> in{-1, -1};
    Matrix value;
    bool detached = false;
    double eps = 0.0;
    double scalar = 0.0;
    std::size_t label = 0;
  };

  struct Adjoints {
    std::vector<Matrix> grad;
    std::vector<char> live;
    explicit Adjoints(std::size_t n) : grad(n), live(n, 0) {}
    void add(int idx, Matrix inc) {
      if (!live[idx]) {
        grad[idx] = std::move(inc);
        live[idx] = 1;
      } else {
        Matrix& dst = grad[idx];
        for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += inc.data()[i];
      }
    }
  };

  std::vector<Node> nodes_;

  const Matrix& val(Var v) const { return nodes_[v.idx].value; }

  Var push(Op op, std::array<int, 2> in, Matrix value) {
    Node n;
    n.op = op;
    n.in = in;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  void backprop_node(int i, Adjoints& adj) const {
    const Node& n = nodes_[i];
    const Matrix& g = adj.grad[i];
    switch (n.op) {
      case Op::leaf:
      case Op::constant:
      case Op::detach:
        break;
      case Op::matmul: {
        const Matrix& a = nodes_[n.in[0]].value;
        const Matrix& b = nodes_[n.in[1]].value;
        adj.add(n.in[0], walkprop::matmul(g, transpose(b)));
        adj.add(n.in[1], walkprop::matmul(transpose(a), g));
        break;
      }
      case Op::add: {
        adj.add(n.in[0], g);
        adj.add(n.in[1], g);
        break;
      }
      case Op::add_rowvec: {
        adj.add(n.in[0], g);
        Matrix colsum(1, g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) colsum(0, c) += g(r, c);
        adj.add(n.in[1], std::move(colsum));
        break;
      }
      case Op::hadamard: {
        const Matrix& a = nodes_[n.in[0]].value;
        const Matrix& b = nodes_[n.in[1]].value;
        adj.add(n.in[0], walkprop::hadamard(g, b));
        adj.add(n.in[1], walkprop::hadamard(g, a));
        break;
      }
      case Op::safe_divide: {
        const Matrix& a = nodes_[n.in[0]].value;
        const Matrix& b = nodes_[n.in[1]].value;
        Matrix da = g;
        Matrix db(b.rows(), b.cols());
        for (std::size_t k = 0; k < b.size(); ++k) {
          const double bs = stabilize(b.data()[k], n.eps);
          da.data()[k] /= bs;
          // inside the stabilized band the output no longer depends on b
          if (b.data()[k] >= n.eps || b.data()[k] <= -n.eps)
            db.data()[k] = -g.data()[k] * a.data()[k] / (bs * bs);
        }
        adj.add(n.in[0], std::move(da));
        adj.add(n.in[1], std::move(db));
        break;
      }
      case Op::relu: {
        const Matrix& a = nodes_[n.in[0]].value;
        Matrix da = g;
        for (std::size_t k = 0; k < a.size(); ++k)
          if (a.data()[k] <= 0.0) da.data()[k] = 0.0;  // gradient at 0 is 0
        adj.add(n.in[0], std::move(da));
        break;
      }
      case Op::mean_rows: {
        const Matrix& a = nodes_[n.in[0]].value;
        Matrix da(a.rows(), a.cols());
        const double inv = 1.0 / static_cast<double>(a.rows());
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < a.cols(); ++c) da(r, c) = g(0, c) * inv;
        adj.add(n.in[0], std::move(da));
        break;
      }
      case Op::sum: {
        const Matrix& a = nodes_[n.in[0]].value;
        adj.add(n.in[0], Matrix(a.rows(), a.cols(), g(0, 0)));
        break;
      }
      case Op::scale: {
        adj.add(n.in[0], walkprop::scale(g, n.scalar));
        break;
      }
      case Op::softmax_cross_entropy: {
        const Matrix& lg = nodes_[n.in[0]].value;
        std::vector<double> p = softmax_row(lg);
        Matrix dlg(1, lg.cols());
        for (std::size_t j = 0; j < lg.cols(); ++j) dlg(0, j) = g(0, 0) * p[j];
        dlg(0, n.label) -= g(0, 0);
        adj.add(n.in[0], std::move(dlg));
        break;
      }
    }
  }
};

using TapeVar = Tape::Var;

}  // namespace walkprop

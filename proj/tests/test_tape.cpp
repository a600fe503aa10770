#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "walkprop/tape.hpp"

using namespace walkprop;
using wptest::finite_difference_grad;
using wptest::max_rel_error;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.uniform(lo, hi);
  return m;
}

// keeps entries at least `margin` away from zero so the relu kink and the
// safe_divide band are not straddled by the finite-difference probe
Matrix away_from_zero(Matrix m, double margin) {
  for (double& x : m.data())
    if (std::abs(x) < margin) x = x < 0.0 ? -margin : margin;
  return m;
}

}  // namespace

TEST_CASE("grad of sum is all ones") {
  Tape tape;
  TapeVar x = tape.leaf(Matrix{{1.0, -2.0}, {0.5, 3.0}});
  Matrix g = tape.grad(tape.sum(x), x);
  CHECK(g == Matrix::ones(2, 2));
}

TEST_CASE("detach turns a factor into a constant") {
  // y = sum(x (Hadamard) detach(x)) behaves like sum(x * c) with c = x
  Matrix x0{{1.5, -0.75}, {2.0, 0.25}};
  Tape tape;
  TapeVar x = tape.leaf(x0);
  TapeVar y = tape.sum(tape.hadamard(x, tape.detach(x)));
  CHECK(tape.grad(y, x) == x0);
}

TEST_CASE("detach preserves the forward value bit for bit") {
  Rng rng(5);
  Matrix x0 = random_matrix(3, 4, rng);
  Tape tape;
  TapeVar x = tape.leaf(x0);
  TapeVar d = tape.detach(tape.relu(tape.scale(x, 1.7)));
  CHECK(tape.value(d) == relu(scale(x0, 1.7)));
  // and blocks every gradient path through it
  TapeVar y = tape.sum(d);
  CHECK(tape.grad(y, x) == Matrix(3, 4));
}

TEST_CASE("grad of a non-ancestor is zero") {
  Tape tape;
  TapeVar x = tape.leaf(Matrix{{1.0}});
  TapeVar z = tape.leaf(Matrix{{2.0, 3.0}});
  TapeVar y = tape.sum(tape.scale(x, 2.0));
  CHECK(tape.grad(y, z) == Matrix(1, 2));
}

TEST_CASE("finite differences: per-op gradients") {
  Rng rng(17);
  const double tol = 1e-5;

  SECTION("matmul") {
    Matrix a0 = random_matrix(3, 4, rng), b0 = random_matrix(4, 2, rng);
    auto fa = [&](const Matrix& a) {
      Tape t;
      return t.value(t.sum(t.matmul(t.leaf(a), t.constant(b0))))(0, 0);
    };
    auto fb = [&](const Matrix& b) {
      Tape t;
      return t.value(t.sum(t.matmul(t.constant(a0), t.leaf(b))))(0, 0);
    };
    Tape t;
    TapeVar a = t.leaf(a0), b = t.leaf(b0);
    TapeVar y = t.sum(t.matmul(a, b));
    CHECK(max_rel_error(t.grad(y, a), finite_difference_grad(fa, a0)) < tol);
    CHECK(max_rel_error(t.grad(y, b), finite_difference_grad(fb, b0)) < tol);
  }

  SECTION("hadamard, add, scale") {
    Matrix a0 = random_matrix(2, 3, rng), b0 = random_matrix(2, 3, rng);
    auto f = [&](const Matrix& a) {
      Tape t;
      TapeVar v = t.leaf(a);
      TapeVar w = t.add(t.hadamard(v, t.constant(b0)), t.scale(v, -0.5));
      return t.value(t.sum(w))(0, 0);
    };
    Tape t;
    TapeVar a = t.leaf(a0);
    TapeVar y = t.sum(t.add(t.hadamard(a, t.constant(b0)), t.scale(a, -0.5)));
    CHECK(max_rel_error(t.grad(y, a), finite_difference_grad(f, a0)) < tol);
  }

  SECTION("add with row broadcast") {
    Matrix a0 = random_matrix(3, 2, rng), b0 = random_matrix(1, 2, rng);
    // shift a0 so that a0 + b0 is away from the relu kink
    Matrix shifted = away_from_zero(add_rowvec(a0, b0), 1e-2);
    Matrix a_adj = sub(shifted, add_rowvec(Matrix(3, 2), b0));
    Tape t;
    TapeVar b = t.leaf(b0);
    TapeVar y = t.sum(t.relu(t.add(t.constant(a_adj), b)));
    auto fb = [&](const Matrix& b2) {
      Tape u;
      return u.value(u.sum(u.relu(u.add(u.constant(a_adj), u.leaf(b2)))))(0, 0);
    };
    CHECK(max_rel_error(t.grad(y, b), finite_difference_grad(fb, b0)) < tol);
  }

  SECTION("relu away from the kink") {
    Matrix a0 = away_from_zero(random_matrix(3, 3, rng), 1e-3);
    auto f = [&](const Matrix& a) {
      Tape t;
      return t.value(t.sum(t.relu(t.leaf(a))))(0, 0);
    };
    Tape t;
    TapeVar a = t.leaf(a0);
    CHECK(max_rel_error(t.grad(t.sum(t.relu(a)), a), finite_difference_grad(f, a0)) < tol);
  }

  SECTION("safe_divide away from the stabilizer band") {
    Matrix a0 = random_matrix(2, 3, rng);
    Matrix b0 = away_from_zero(random_matrix(2, 3, rng), 0.05);
    const double eps = 1e-9;
    auto fa = [&](const Matrix& a) {
      Tape t;
      return t.value(t.sum(t.safe_divide(t.leaf(a), t.constant(b0), eps)))(0, 0);
    };
    auto fb = [&](const Matrix& b) {
      Tape t;
      return t.value(t.sum(t.safe_divide(t.constant(a0), t.leaf(b), eps)))(0, 0);
    };
    Tape t;
    TapeVar a = t.leaf(a0), b = t.leaf(b0);
    TapeVar y = t.sum(t.safe_divide(a, b, eps));
    CHECK(max_rel_error(t.grad(y, a), finite_difference_grad(fa, a0)) < tol);
    CHECK(max_rel_error(t.grad(y, b), finite_difference_grad(fb, b0)) < tol);
  }

  SECTION("mean_rows") {
    Matrix a0 = random_matrix(4, 3, rng);
    auto f = [&](const Matrix& a) {
      Tape t;
      return t.value(t.sum(t.mean_rows(t.leaf(a))))(0, 0);
    };
    Tape t;
    TapeVar a = t.leaf(a0);
    CHECK(max_rel_error(t.grad(t.sum(t.mean_rows(a)), a), finite_difference_grad(f, a0)) < tol);
  }

  SECTION("softmax cross entropy") {
    Matrix a0 = random_matrix(1, 4, rng);
    auto f = [&](const Matrix& a) {
      Tape t;
      return t.value(t.softmax_cross_entropy(t.leaf(a), 2))(0, 0);
    };
    Tape t;
    TapeVar a = t.leaf(a0);
    CHECK(max_rel_error(t.grad(t.softmax_cross_entropy(a, 2), a),
                        finite_difference_grad(f, a0)) < tol);
  }
}

TEST_CASE("finite differences: composite graph") {
  // resample until the relu pre-activations clear the kink by a margin wider
  // than the probe step, as the contract requires
  Matrix x0, w0, d0;
  for (std::uint64_t seed = 23;; ++seed) {
    Rng rng(seed);
    x0 = away_from_zero(random_matrix(3, 3, rng), 5e-3);
    w0 = random_matrix(3, 3, rng);
    d0 = away_from_zero(random_matrix(3, 3, rng), 0.05);
    double margin = 1e9;
    const Matrix pre = matmul(x0, w0);
    for (double v : pre.data()) margin = std::min(margin, std::abs(v));
    if (margin > 1e-3) break;
  }
  auto f = [&](const Matrix& x) {
    Tape t;
    TapeVar v = t.leaf(x);
    TapeVar h = t.relu(t.matmul(v, t.constant(w0)));
    TapeVar q = t.safe_divide(t.hadamard(h, v), t.constant(d0), 1e-9);
    return t.value(t.sum(q))(0, 0);
  };
  Tape t;
  TapeVar x = t.leaf(x0);
  TapeVar h = t.relu(t.matmul(x, t.constant(w0)));
  TapeVar q = t.safe_divide(t.hadamard(h, x), t.constant(d0), 1e-9);
  Matrix got = t.grad(t.sum(q), x);
  CHECK(max_rel_error(got, finite_difference_grad(f, x0), 1e-6) < 1e-5);
}

TEST_CASE("tape is deterministic") {
  Rng rng(31);
  Matrix x0 = random_matrix(4, 4, rng);
  auto run = [&]() {
    Tape t;
    TapeVar x = t.leaf(x0);
    TapeVar h = t.relu(t.matmul(x, x));
    TapeVar y = t.sum(t.hadamard(h, t.detach(x)));
    return std::make_pair(t.value(y), t.grad(y, x));
  };
  auto [v1, g1] = run();
  auto [v2, g2] = run();
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

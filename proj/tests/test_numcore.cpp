#include <cmath>
#include <vector>

#include "doctest.h"
#include "dcor/numcore.hpp"
#include "test_support.hpp"

using namespace dcor;
using dcor::test::finite_diff_max_rel_err;
using dcor::test::random_matrix_away_from_zero;

namespace {

// Independent oracle: naive triple-loop product.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix tape_matmul(const Matrix& a, const Matrix& b) {
  Tape t;
  return t.value(t.matmul(t.input(a), t.input(b)));
}

}  // namespace

TEST_SUITE("numcore") {

TEST_CASE("matmul identity leaves the operand unchanged") {
  Rng rng(11);
  const Matrix m = Matrix::uniform(2, 2, -3.0, 3.0, rng);
  const Matrix out = tape_matmul(Matrix::identity(2), m);
  CHECK(max_abs_diff(out, m) == 0.0);
}

TEST_CASE("matmul matches the frozen hand value and the naive oracle") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  const Matrix expect = Matrix::from_rows({{19, 22}, {43, 50}});  // from the oracle below
  const Matrix got = tape_matmul(a, b);
  CHECK(max_abs_diff(got, expect) == 0.0);
  CHECK(max_abs_diff(got, naive_matmul(a, b)) == 0.0);
}

TEST_CASE("matmul equals the naive oracle bit for bit on random shapes") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + rng.uniform_int(7);
    const int k = 1 + rng.uniform_int(7);
    const int m = 1 + rng.uniform_int(7);
    const Matrix a = Matrix::uniform(n, k, -2.0, 2.0, rng);
    const Matrix b = Matrix::uniform(k, m, -2.0, 2.0, rng);
    CHECK(max_abs_diff(tape_matmul(a, b), naive_matmul(a, b)) == 0.0);
  }
}

TEST_CASE("matmul annihilates zeros") {
  Rng rng(1);
  const Matrix z = Matrix::zeros(2, 3);
  const Matrix b = Matrix::uniform(3, 4, -5.0, 5.0, rng);
  const Matrix out = tape_matmul(z, b);
  CHECK(out.rows == 2);
  CHECK(out.cols == 4);
  for (double x : out.v) CHECK(x == 0.0);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tape t;
  const ValueId a = t.input(Matrix::zeros(2, 3));
  const ValueId b = t.input(Matrix::zeros(4, 2));
  CHECK_THROWS_AS(t.matmul(a, b), DimensionError);
  CHECK_THROWS_WITH_AS(t.matmul(a, b), doctest::Contains("2x3"), DimensionError);
}

TEST_CASE("sigmoid hits the logistic anchor points") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(25.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sigmoid(25.0) < 1.0);
  CHECK(sigmoid(1000.0) < 1.0);  // saturation keeps the open interval
  CHECK(sigmoid(-1000.0) > 0.0);
}

TEST_CASE("leaky_relu follows its definition") {
  CHECK(leaky_relu(-1.0, 0.2) == -0.2);
  CHECK(leaky_relu(3.0, 0.2) == 3.0);
  Tape t;
  const ValueId out = t.leaky_relu(t.input(Matrix::from_rows({{-1.0, 2.0}})), 0.2);
  CHECK(t.value(out)(0, 0) == -0.2);
  CHECK(t.value(out)(0, 1) == 2.0);
}

TEST_CASE("elementwise binaries require equal or row-broadcastable shapes") {
  Tape t;
  const ValueId a = t.input(Matrix::zeros(3, 4));
  const ValueId bias = t.input(Matrix::constant(1, 4, 2.0));
  const ValueId bad = t.input(Matrix::zeros(2, 4));
  CHECK(t.value(t.add(a, bias))(2, 3) == 2.0);
  CHECK_THROWS_AS(t.add(a, bad), DimensionError);
  CHECK_THROWS_AS(t.mul(a, bad), DimensionError);
  CHECK_THROWS_AS(t.sub(a, bad), DimensionError);
}

TEST_CASE("masked softmax: single unmasked entry gets weight 1") {
  Tape t;
  const Matrix scores = Matrix::from_rows({{3.0, -1.0, 2.0}});
  const ValueId out = t.masked_row_softmax(t.input(scores), {0, 1, 0});
  CHECK(t.value(out)(0, 0) == 0.0);
  CHECK(t.value(out)(0, 1) == 1.0);
  CHECK(t.value(out)(0, 2) == 0.0);
}

TEST_CASE("masked softmax: equal scores split evenly, masked stay exactly zero") {
  Tape t;
  const Matrix scores = Matrix::from_rows({{0.7, 0.7, 123.0}, {0.1, 0.2, 0.3}});
  const ValueId out = t.masked_row_softmax(t.input(scores), {1, 1, 0, 1, 1, 1});
  CHECK(t.value(out)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.value(out)(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.value(out)(0, 2) == 0.0);
  for (int i = 0; i < 2; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < 3; ++j) row_sum += t.value(out)(i, j);
    CHECK(std::fabs(row_sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("masked softmax rows sum to one on random draws") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 1 + rng.uniform_int(6);
    const int cols = 1 + rng.uniform_int(8);
    const Matrix scores = Matrix::uniform(rows, cols, -30.0, 30.0, rng);
    std::vector<std::uint8_t> mask(scores.size());
    for (int i = 0; i < rows; ++i) {
      bool any = false;
      for (int j = 0; j < cols; ++j) {
        mask[static_cast<std::size_t>(i) * cols + j] = rng.uniform01() < 0.5 ? 1 : 0;
        any = any || mask[static_cast<std::size_t>(i) * cols + j];
      }
      if (!any) mask[static_cast<std::size_t>(i) * cols + rng.uniform_int(cols)] = 1;
    }
    Tape t;
    const Matrix& out = t.value(t.masked_row_softmax(t.input(scores), mask));
    for (int i = 0; i < rows; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < cols; ++j) {
        if (!mask[static_cast<std::size_t>(i) * cols + j]) CHECK(out(i, j) == 0.0);
        row_sum += out(i, j);
      }
      CHECK(std::fabs(row_sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("masked softmax rejects an all-masked row") {
  Tape t;
  const ValueId scores = t.input(Matrix::zeros(2, 3));
  CHECK_THROWS_AS(t.masked_row_softmax(scores, {1, 1, 1, 0, 0, 0}), ContractError);
}

TEST_CASE("backward: gradient of sum of squares is 2x") {
  Rng rng(3);
  const Matrix x = Matrix::uniform(3, 4, -1.0, 1.0, rng);
  Tape t;
  const ValueId xs = t.param(x);
  t.backward(t.sum(t.mul(xs, xs)));
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    CHECK(t.grad(xs).v[i] == doctest::Approx(2.0 * x.v[i]).epsilon(1e-15));
  }
}

TEST_CASE("backward: gradient of sum of sigmoid at zero is a quarter") {
  Tape t;
  const ValueId xs = t.param(Matrix::zeros(2, 3));
  t.backward(t.sum(t.sigmoid(xs)));
  for (double gx : t.grad(xs).v) CHECK(gx == 0.25);
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tape t;
  const ValueId xs = t.param(Matrix::zeros(2, 2));
  CHECK_THROWS_AS(t.backward(t.mul(xs, xs)), ContractError);
}

TEST_CASE("finite differences agree with backward across composed ops") {
  Rng rng(19);
  // f(x) = sum(W2 . softmax_masked(leaky(x W1 + b)) + sigmoid(x) + row_distance(x, c))
  Matrix x = random_matrix_away_from_zero(4, 5, rng);
  const Matrix w1 = random_matrix_away_from_zero(5, 3, rng);
  const Matrix b = random_matrix_away_from_zero(1, 3, rng);
  const Matrix w2 = random_matrix_away_from_zero(4, 3, rng);
  const Matrix c = random_matrix_away_from_zero(4, 5, rng);
  std::vector<std::uint8_t> mask = {1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1};

  const auto build = [&](Tape& t, ValueId xs) {
    const ValueId pre = t.add(t.matmul(xs, t.input(w1)), t.input(b));
    const ValueId act = t.leaky_relu(pre, 0.2);
    const ValueId soft = t.masked_row_softmax(act, mask);
    const ValueId part1 = t.sum(t.mul(soft, t.input(w2)));
    const ValueId part2 = t.sum(t.sigmoid(xs));
    const ValueId part3 = t.sum(t.row_distance(xs, t.input(c)));
    return t.add(t.add(part1, part2), t.scale(part3, 0.7));
  };

  Tape t;
  const ValueId xs = t.param(x);
  t.backward(build(t, xs));
  const Matrix analytic = t.grad(xs);

  const double worst = finite_diff_max_rel_err(x, analytic, [&]() {
    Tape ft;
    return ft.value(build(ft, ft.input(x)))(0, 0);
  });
  CHECK(worst < 1e-5);
}

TEST_CASE("finite differences agree for transpose, slice, sub and scalar ops") {
  Rng rng(23);
  Matrix x = random_matrix_away_from_zero(6, 3, rng);
  const Matrix w = random_matrix_away_from_zero(6, 3, rng);

  const auto build = [&](Tape& t, ValueId xs) {
    const ValueId top = t.slice_rows(xs, 0, 3);                      // 3x3
    const ValueId bottom = t.transpose(t.slice_rows(xs, 3, 6));      // 3x3
    const ValueId mixed = t.sub(t.matmul(top, bottom), t.add_scalar(t.scale(top, 0.3), -0.1));
    return t.add(t.sum(t.mul(mixed, mixed)), t.sum(t.mul(xs, t.input(w))));
  };

  Tape t;
  const ValueId xs = t.param(x);
  t.backward(build(t, xs));
  const Matrix analytic = t.grad(xs);

  const double worst = finite_diff_max_rel_err(x, analytic, [&]() {
    Tape ft;
    return ft.value(build(ft, ft.input(x)))(0, 0);
  });
  CHECK(worst < 1e-5);
}

TEST_CASE("finite differences agree through attention aggregation") {
  Rng rng(29);
  auto nbrs = std::make_shared<NeighborLists>();
  nbrs->offsets = {0, 3, 5, 7, 8};
  nbrs->targets = {0, 1, 2, 0, 1, 2, 3, 3};

  Matrix hidden = random_matrix_away_from_zero(4, 3, rng);
  Matrix p = random_matrix_away_from_zero(4, 1, rng);
  Matrix q = random_matrix_away_from_zero(4, 1, rng);
  const Matrix w = random_matrix_away_from_zero(4, 3, rng);

  const auto build = [&](Tape& t, ValueId hs, ValueId ps, ValueId qs) {
    return t.sum(t.mul(t.attention_aggregate(hs, ps, qs, nbrs, 0.2), t.input(w)));
  };

  Tape t;
  const ValueId hs = t.param(hidden);
  const ValueId ps = t.param(p);
  const ValueId qs = t.param(q);
  t.backward(build(t, hs, ps, qs));

  const auto eval = [&]() {
    Tape ft;
    return ft.value(build(ft, ft.input(hidden), ft.input(p), ft.input(q)))(0, 0);
  };
  CHECK(finite_diff_max_rel_err(hidden, t.grad(hs), eval) < 1e-5);
  CHECK(finite_diff_max_rel_err(p, t.grad(ps), eval) < 1e-5);
  CHECK(finite_diff_max_rel_err(q, t.grad(qs), eval) < 1e-5);
}

TEST_CASE("row_distance values and mismatch error") {
  Tape t;
  const Matrix a = Matrix::from_rows({{1.0, 1.0, 1.0, 1.0}, {2.0, 2.0, 2.0, 2.0}});
  const Matrix b = Matrix::from_rows({{0.5, 0.5, 0.5, 0.5}, {2.0, 2.0, 2.0, 2.0}});
  const ValueId d = t.row_distance(t.input(a), t.input(b));
  CHECK(t.value(d)(0, 0) == 0.5);
  CHECK(t.value(d)(1, 0) == 0.0);
  CHECK_THROWS_AS(t.row_distance(t.input(a), t.input(Matrix::zeros(2, 3))), DimensionError);
}

TEST_CASE("operations are deterministic: identical inputs, identical bits") {
  Rng rng(31);
  const Matrix a = Matrix::uniform(5, 6, -1.0, 1.0, rng);
  const Matrix b = Matrix::uniform(6, 4, -1.0, 1.0, rng);
  const auto run = [&]() {
    Tape t;
    const ValueId out = t.sigmoid(t.matmul(t.input(a), t.input(b)));
    return t.value(out);
  };
  const Matrix first = run();
  const Matrix second = run();
  CHECK(first.v == second.v);
}

TEST_CASE("adam: zero gradient leaves fresh parameters unchanged") {
  Matrix p = Matrix::from_rows({{1.0, -2.0}, {3.0, 4.0}});
  const Matrix keep = p;
  AdamState st = AdamState::like(p);
  adam_step(p, Matrix::zeros(2, 2), st, 0.05);
  CHECK(p.v == keep.v);
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step magnitude is about lr regardless of gradient scale") {
  // Hand simulation: m_hat = g, v_hat = g^2, so step = lr * g / (|g| + eps).
  for (const double g : {1e-4, 1.0, 250.0}) {
    Matrix p = Matrix::zeros(1, 1);
    AdamState st = AdamState::like(p);
    adam_step(p, Matrix::constant(1, 1, g), st, 0.01);
    CHECK(std::fabs(p(0, 0)) > 0.0099);
    CHECK(std::fabs(p(0, 0)) <= 0.01);
    CHECK(p(0, 0) < 0.0);
  }
}

TEST_CASE("adam: repeated runs are bitwise identical") {
  Rng rng(37);
  const Matrix g1 = Matrix::uniform(3, 3, -1.0, 1.0, rng);
  const Matrix g2 = Matrix::uniform(3, 3, -1.0, 1.0, rng);
  const auto run = [&]() {
    Matrix p = Matrix::constant(3, 3, 0.5);
    AdamState st = AdamState::like(p);
    adam_step(p, g1, st, 0.01);
    adam_step(p, g2, st, 0.01);
    return p;
  };
  CHECK(run().v == run().v);
}

TEST_CASE("adam rejects mismatched shapes") {
  Matrix p = Matrix::zeros(2, 2);
  AdamState st = AdamState::like(p);
  CHECK_THROWS_AS(adam_step(p, Matrix::zeros(2, 3), st, 0.01), DimensionError);
  AdamState wrong = AdamState::like(Matrix::zeros(1, 1));
  CHECK_THROWS_AS(adam_step(p, Matrix::zeros(2, 2), wrong, 0.01), DimensionError);
}

TEST_CASE("gradient accumulates when a value feeds two consumers") {
  // f = sum(x) + sum(x * x): df/dx = 1 + 2x.
  const Matrix x = Matrix::from_rows({{0.5, -1.5}});
  Tape t;
  const ValueId xs = t.param(x);
  t.backward(t.add(t.sum(xs), t.sum(t.mul(xs, xs))));
  CHECK(t.grad(xs)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.grad(xs)(0, 1) == doctest::Approx(-2.0).epsilon(1e-15));
}

}  // TEST_SUITE

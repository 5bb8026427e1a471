// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/autodiff.hpp"
#include "core/common.hpp"
#include "test_util.hpp"

using namespace narxid;
using ad::Tape;
using ad::Var;
using testutil::rel_err;

TEST_CASE("lift stores the value and is its own unit gradient") {
  Tape tape;
  CHECK(tape.lift(0.0).value() == 0.0);
  CHECK(tape.lift(1.5).value() == 1.5);
  const Var c = tape.lift(2.5);
  const auto g = tape.backward(c, std::vector<Var>{c});
  CHECK(g[0] == 1.0);
}

TEST_CASE("lift rejects non-finite input") {
  Tape tape;
  CHECK_THROWS_AS(tape.lift(std::nan("")), UsageError);
  CHECK_THROWS_AS(tape.lift(INFINITY), UsageError);
}

TEST_CASE("basic arithmetic values and partials") {
  Tape tape;
  const Var x = tape.lift(2.0);
  const Var y = tape.lift(3.0);
  const Var p = x * y;
  CHECK(p.value() == 6.0);
  const auto g = tape.backward(p, std::vector<Var>{x, y});
  CHECK(g[0] == 3.0);
  CHECK(g[1] == 2.0);

  const Var t = ad::tanh(tape.lift(0.0));
  CHECK(t.value() == 0.0);
  const auto gt = tape.backward(t, std::vector<Var>{Var(t)});
  CHECK(gt[0] == 1.0);
}

TEST_CASE("square matches the finite-difference oracle") {
  Tape tape;
  const Var x = tape.lift(-1.5);
  const Var s = ad::square(x);
  CHECK(s.value() == 2.25);
  const auto g = tape.backward(s, std::vector<Var>{x});
  const double fd = testutil::fd_partial([](double v) { return v * v; }, -1.5);
  CHECK(rel_err(g[0], fd) < 1e-6);
  CHECK(g[0] == -3.0);
}

TEST_CASE("division guards against tiny denominators") {
  Tape tape;
  const Var a = tape.lift(1.0);
  const Var b = tape.lift(0.0);
  CHECK_THROWS_AS(a / b, NumericError);
}

TEST_CASE("mixing tapes is rejected") {
  Tape t1, t2;
  const Var a = t1.lift(1.0);
  const Var b = t2.lift(2.0);
  CHECK_THROWS_AS(a + b, UsageError);
}

namespace {

// A small random straight-line program over double or Var, so the tape can be
// checked against plain evaluation and finite differences.
struct Program {
  struct Step {
    int kind;  // 0 add, 1 sub, 2 mul, 3 tanh, 4 square, 5 guarded div, 6 scaled exp
    int a;
    int b;
  };
  int n_leaves = 0;
  std::vector<Step> steps;

  static Program random(Rng& rng, int n_leaves, int depth) {
    Program p;
    p.n_leaves = n_leaves;
    int size = n_leaves;
    for (int i = 0; i < depth; ++i) {
      Program::Step s;
      s.kind = static_cast<int>(rng.next_u64() % 7);
      s.a = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(size));
      s.b = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(size));
      p.steps.push_back(s);
      ++size;
    }
    return p;
  }

  template <class S, class TanhFn, class SquareFn, class ExpFn>
  S eval(const std::vector<S>& leaves, TanhFn tanh_fn, SquareFn square_fn, ExpFn exp_fn) const {
    std::vector<S> vals = leaves;
    for (const Step& s : steps) {
      const S a = vals[static_cast<std::size_t>(s.a)];
      const S b = vals[static_cast<std::size_t>(s.b)];
      switch (s.kind) {
        case 0: vals.push_back(a + b); break;
        case 1: vals.push_back(a - b); break;
        case 2: vals.push_back(a * b); break;
        case 3: vals.push_back(tanh_fn(a)); break;
        case 4: vals.push_back(square_fn(a)); break;
        case 5: vals.push_back(a / (square_fn(b) + 1.5)); break;
        default: vals.push_back(exp_fn(a * 0.25)); break;
      }
    }
    return vals.back();
  }

  double eval_plain(const Eigen::VectorXd& x) const {
    std::vector<double> leaves(x.data(), x.data() + x.size());
    return eval<double>(
        leaves, [](double v) { return std::tanh(v); }, [](double v) { return v * v; },
        [](double v) { return std::exp(v); });
  }

  // Value + gradient via one taped evaluation and a reverse sweep.
  std::pair<double, Eigen::VectorXd> eval_tape(const Eigen::VectorXd& x) const {
    Tape tape;
    std::vector<Var> leaves;
    for (Eigen::Index i = 0; i < x.size(); ++i) leaves.push_back(tape.lift(x(i)));
    const Var out = eval<Var>(
        leaves, [](Var v) { return ad::tanh(v); }, [](Var v) { return ad::square(v); },
        [](Var v) { return ad::exp(v); });
    const auto g = tape.backward(out, leaves);
    Eigen::VectorXd grad(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) grad(i) = g[static_cast<std::size_t>(i)];
    return {out.value(), grad};
  }
};

}  // namespace

TEST_CASE("gradients of random compositions match finite differences") {
  Rng rng(42);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int n_leaves = 2 + static_cast<int>(rng.next_u64() % 4);
    const Program prog = Program::random(rng, n_leaves, 10);
    Eigen::VectorXd x(n_leaves);
    for (int i = 0; i < n_leaves; ++i) x(i) = rng.uniform(-1.5, 1.5);
    if (!std::isfinite(prog.eval_plain(x))) continue;

    const auto [value, grad] = prog.eval_tape(x);
    CHECK(value == prog.eval_plain(x));
    const Eigen::VectorXd fd = testutil::fd_gradient(
        [&](const Eigen::VectorXd& v) { return prog.eval_plain(v); }, x);
    CHECK(testutil::max_rel_err(grad, fd) < 1e-5);
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("gradient is linear in the output expression") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    const Var x = tape.lift(rng.uniform(-2.0, 2.0));
    const Var y = tape.lift(rng.uniform(-2.0, 2.0));
    const Var f = ad::tanh(x * y) + ad::square(x);
    const Var g = x - y * y;
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    const Var combo = a * f + b * g;

    const auto gf = tape.backward(f, std::vector<Var>{x, y});
    const auto gg = tape.backward(g, std::vector<Var>{x, y});
    const auto gc = tape.backward(combo, std::vector<Var>{x, y});
    for (int i = 0; i < 2; ++i)
      CHECK(std::fabs(gc[static_cast<std::size_t>(i)] -
                      (a * gf[static_cast<std::size_t>(i)] + b * gg[static_cast<std::size_t>(i)])) <=
            1e-12);
  }
}

TEST_CASE("repeated sweeps are bit-identical and replay reproduces values") {
  Rng rng(11);
  const Program prog = Program::random(rng, 3, 10);
  Eigen::VectorXd x(3);
  x << 0.3, -0.8, 1.2;

  const auto [v1, g1] = prog.eval_tape(x);
  const auto [v2, g2] = prog.eval_tape(x);
  CHECK(v1 == v2);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(g1(i) == g2(i));

  Tape tape;
  std::vector<Var> leaves;
  for (Eigen::Index i = 0; i < 3; ++i) leaves.push_back(tape.lift(x(i)));
  const Var out = prog.eval<Var>(
      leaves, [](Var v) { return ad::tanh(v); }, [](Var v) { return ad::square(v); },
      [](Var v) { return ad::exp(v); });
  (void)out;
  const auto replayed = tape.replay();
  for (std::size_t i = 0; i < tape.size(); ++i) CHECK(replayed[i] == tape.value(static_cast<std::uint32_t>(i)));
}

TEST_CASE("unreachable seeds get zero gradient") {
  Tape tape;
  const Var x = tape.lift(1.0);
  const Var f = ad::square(x);
  const Var unrelated = tape.lift(5.0);
  const Var later = ad::tanh(unrelated);  // appended after f
  const auto g = tape.backward(f, std::vector<Var>{unrelated, later});
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("recorded reverse sweep yields second derivatives") {
  // f = x^2: recorded gradient is 2x, whose derivative is 2.
  {
    Tape tape;
    const Var x = tape.lift(1.7);
    const Var f = ad::square(x);
    const auto gv = tape.backward_as_vars(f, std::vector<Var>{x});
    CHECK(gv[0].value() == 2.0 * 1.7);
    const auto g2 = tape.backward(gv[0], std::vector<Var>{x});
    CHECK(g2[0] == 2.0);
  }
  // f = tanh(x) at 0: second derivative 0.
  {
    Tape tape;
    const Var x = tape.lift(0.0);
    const Var f = ad::tanh(x);
    const auto gv = tape.backward_as_vars(f, std::vector<Var>{x});
    CHECK(gv[0].value() == 1.0);
    const auto g2 = tape.backward(gv[0], std::vector<Var>{x});
    CHECK(g2[0] == 0.0);
  }
  // d/dtheta [ (df/du)^2 ] for f = theta*u at theta=3, u=5 -> 2*theta = 6.
  {
    Tape tape;
    const Var theta = tape.lift(3.0);
    const Var u = tape.lift(5.0);
    const Var f = theta * u;
    const auto du = tape.backward_as_vars(f, std::vector<Var>{u});
    const Var penalty = ad::square(du[0]);
    const auto g = tape.backward(penalty, std::vector<Var>{theta});
    CHECK(g[0] == 6.0);
  }
}

TEST_CASE("nested sweeps match finite differences of first-order gradients") {
  Rng rng(1234);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n_leaves = 2 + static_cast<int>(rng.next_u64() % 3);
    const Program prog = Program::random(rng, n_leaves, 8);
    Eigen::VectorXd x(n_leaves);
    for (int i = 0; i < n_leaves; ++i) x(i) = rng.uniform(-1.2, 1.2);
    if (!std::isfinite(prog.eval_plain(x))) continue;

    // Diagonal second derivatives via backward over the recorded sweep.
    for (int i = 0; i < n_leaves; ++i) {
      Tape tape;
      std::vector<Var> leaves;
      for (int k = 0; k < n_leaves; ++k) leaves.push_back(tape.lift(x(k)));
      const Var out = prog.eval<Var>(
          leaves, [](Var v) { return ad::tanh(v); }, [](Var v) { return ad::square(v); },
          [](Var v) { return ad::exp(v); });
      const auto gv = tape.backward_as_vars(out, std::vector<Var>{leaves[static_cast<std::size_t>(i)]});
      const auto second = tape.backward(gv[0], std::vector<Var>{leaves[static_cast<std::size_t>(i)]});

      const double fd = testutil::fd_partial(
          [&](double v) {
            Eigen::VectorXd xv = x;
            xv(i) = v;
            return prog.eval_tape(xv).second(i);
          },
          x(i), 1e-6);
      CHECK(rel_err(second[0], fd) < 1e-4);
    }
    ++checked;
  }
  CHECK(checked >= 25);
}

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/fir.hpp"
#include "core/mlp.hpp"
#include "test_util.hpp"

using namespace narxid;
using model::Activation;
using model::MlpParams;
using model::NarxConfig;

namespace {

MlpParams random_params(const NarxConfig& cfg, std::uint64_t seed) {
  MlpParams p = model::init_params(cfg, seed);
  Rng rng(seed ^ 0xabcdULL);
  for (int i = 0; i < cfg.q; ++i) p.b_hidden(i) = rng.uniform(-0.5, 0.5);
  p.b_out = rng.uniform(-0.5, 0.5);
  return p;
}

std::vector<double> random_regressor(const NarxConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> r(static_cast<std::size_t>(cfg.regressor_size()));
  for (double& v : r) v = rng.uniform(-1.0, 1.0);
  return r;
}

}  // namespace

TEST_CASE("initialization is reproducible and respects the fan-in bounds") {
  const NarxConfig cfg{30, 30, 20, Activation::kTanh};
  CHECK(cfg.regressor_size() == 61);

  const MlpParams a = model::init_params(cfg, 99);
  const MlpParams b = model::init_params(cfg, 99);
  CHECK(a.to_flat() == b.to_flat());
  const MlpParams c = model::init_params(cfg, 100);
  CHECK(a.to_flat() != c.to_flat());

  const double hidden_bound = std::sqrt(1.0 / 61.0);
  CHECK(a.w_in_u.cwiseAbs().maxCoeff() <= hidden_bound);
  CHECK(a.w_in_y.cwiseAbs().maxCoeff() <= hidden_bound);
  CHECK(a.w_out.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 20.0));
  CHECK(a.b_hidden.isZero(0.0));
  CHECK(a.b_out == 0.0);
}

TEST_CASE("initialization draws have the statistics of the uniform law") {
  // 1e5 hidden weights; the sample mean must sit within 3 sigma / sqrt(n).
  const NarxConfig cfg{999, 0, 100, Activation::kTanh};
  const MlpParams p = model::init_params(cfg, 7);
  const double n = static_cast<double>(p.w_in_u.size());
  CHECK(n == 100000.0);
  const double bound = std::sqrt(1.0 / cfg.regressor_size());
  const double sigma = bound / std::sqrt(3.0);
  const double mean = p.w_in_u.sum() / n;
  CHECK(std::fabs(mean) < 3.0 * sigma / std::sqrt(n));
}

TEST_CASE("forward trivial cases") {
  const NarxConfig cfg{3, 2, 4, Activation::kTanh};
  const MlpParams zeros = MlpParams::zeros(cfg);
  const auto reg = random_regressor(cfg, 5);
  CHECK(model::forward(cfg, zeros, reg) == 0.0);

  // Constant network: zero first layer, unit output weight, bias c.
  const NarxConfig cfg1{3, 2, 1, Activation::kTanh};
  MlpParams constant = MlpParams::zeros(cfg1);
  constant.w_out(0) = 1.0;
  constant.b_out = 0.375;
  const auto reg1 = random_regressor(cfg1, 6);
  CHECK(model::forward(cfg1, constant, reg1) == 0.375);
}

TEST_CASE("forward rejects regressor length mismatches") {
  const NarxConfig cfg{3, 2, 4, Activation::kTanh};
  const MlpParams p = MlpParams::zeros(cfg);
  std::vector<double> bad(3, 0.0);
  CHECK_THROWS_AS(model::forward(cfg, p, bad), UsageError);
}

TEST_CASE("taped forward equals the plain forward bitwise") {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const NarxConfig cfg{1 + static_cast<int>(rng.next_u64() % 4),
                         static_cast<int>(rng.next_u64() % 4),
                         1 + static_cast<int>(rng.next_u64() % 5), Activation::kTanh};
    const MlpParams p = random_params(cfg, rng.next_u64());
    const auto reg = random_regressor(cfg, rng.next_u64());

    ad::Tape tape;
    std::vector<ad::Var> reg_vars;
    for (double v : reg) reg_vars.push_back(tape.lift(v));
    const ad::Var out = model::forward(cfg, p, tape, reg_vars);
    CHECK(out.value() == model::forward(cfg, p, reg));
  }
}

TEST_CASE("input gradients match finite differences") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const NarxConfig cfg{1 + static_cast<int>(rng.next_u64() % 4),
                         static_cast<int>(rng.next_u64() % 4),
                         1 + static_cast<int>(rng.next_u64() % 5), Activation::kTanh};
    const MlpParams p = random_params(cfg, rng.next_u64());
    const auto reg = random_regressor(cfg, rng.next_u64());

    ad::Tape tape;
    std::vector<ad::Var> reg_vars;
    for (double v : reg) reg_vars.push_back(tape.lift(v));
    const ad::Var out = model::forward(cfg, p, tape, reg_vars);
    const auto grads = tape.backward(out, reg_vars);

    Eigen::VectorXd x(static_cast<Eigen::Index>(reg.size()));
    for (std::size_t i = 0; i < reg.size(); ++i) x(static_cast<Eigen::Index>(i)) = reg[i];
    const Eigen::VectorXd fd = testutil::fd_gradient(
        [&](const Eigen::VectorXd& v) {
          std::vector<double> r(v.data(), v.data() + v.size());
          return model::forward(cfg, p, r);
        },
        x);
    for (std::size_t i = 0; i < reg.size(); ++i)
      CHECK(testutil::rel_err(grads[i], fd(static_cast<Eigen::Index>(i))) < 1e-5);
  }
}

TEST_CASE("parameter gradients match finite differences") {
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const NarxConfig cfg{1 + static_cast<int>(rng.next_u64() % 4),
                         static_cast<int>(rng.next_u64() % 4),
                         1 + static_cast<int>(rng.next_u64() % 5), Activation::kTanh};
    const MlpParams p = random_params(cfg, rng.next_u64());
    const auto reg = random_regressor(cfg, rng.next_u64());
    const Eigen::VectorXd flat = p.to_flat();

    const Eigen::VectorXd fd = testutil::fd_gradient(
        [&](const Eigen::VectorXd& v) {
          return model::forward(cfg, MlpParams::from_flat(cfg, v), reg);
        },
        flat);

    // Closed-form parameter gradient of the single-hidden-layer network.
    Eigen::VectorXd analytic(flat.size());
    {
      MlpParams g = MlpParams::zeros(cfg);
      const int nu = cfg.n_b + 1;
      for (int i = 0; i < cfg.q; ++i) {
        double z = p.b_hidden(i);
        for (int j = 0; j < nu; ++j) z += p.w_in_u(i, j) * reg[static_cast<std::size_t>(j)];
        for (int j = 0; j < cfg.n_a; ++j)
          z += p.w_in_y(i, j) * reg[static_cast<std::size_t>(nu + j)];
        const double x = std::tanh(z);
        const double dx = 1.0 - x * x;
        for (int j = 0; j < nu; ++j)
          g.w_in_u(i, j) = p.w_out(i) * dx * reg[static_cast<std::size_t>(j)];
        for (int j = 0; j < cfg.n_a; ++j)
          g.w_in_y(i, j) = p.w_out(i) * dx * reg[static_cast<std::size_t>(nu + j)];
        g.b_hidden(i) = p.w_out(i) * dx;
        g.w_out(i) = x;
      }
      g.b_out = 1.0;
      analytic = g.to_flat();
    }
    CHECK(testutil::max_rel_err(analytic, fd) < 1e-5);
  }
}

TEST_CASE("output is bounded by |b_out| plus the output weight mass") {
  Rng rng(31);
  const NarxConfig cfg{4, 3, 6, Activation::kTanh};
  const MlpParams p = random_params(cfg, 77);
  const double bound = std::fabs(p.b_out) + p.w_out.cwiseAbs().sum();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> reg(static_cast<std::size_t>(cfg.regressor_size()));
    for (double& v : reg) v = rng.uniform(-50.0, 50.0);
    CHECK(std::fabs(model::forward(cfg, p, reg)) <= bound + 1e-12);
  }
}

TEST_CASE("flat parameter round-trip is lossless") {
  const NarxConfig cfg{5, 4, 3, Activation::kTanh};
  const MlpParams p = random_params(cfg, 123);
  CHECK(p.to_flat().size() == cfg.q * cfg.regressor_size() + 2 * cfg.q + 1);
  const MlpParams q = MlpParams::from_flat(cfg, p.to_flat());
  CHECK(p.to_flat() == q.to_flat());
  CHECK(p.w_in_u == q.w_in_u);
  CHECK(p.w_in_y == q.w_in_y);
}

TEST_CASE("linearized network reduces to an FIR filter") {
  const NarxConfig cfg{4, 0, 1, Activation::kIdentity};
  MlpParams p = MlpParams::zeros(cfg);
  p.w_in_u(0, 0) = 1.0;
  p.w_out(0) = 1.0;
  auto g = model::linearize_check(cfg, p);
  CHECK(g.size() == 5);
  CHECK(g[0] == 1.0);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] == 0.0);

  // Random linear network: input-derivatives are independent of the
  // regressor and equal the induced FIR coefficients.
  const NarxConfig cfg2{3, 0, 4, Activation::kIdentity};
  MlpParams p2 = random_params({3, 0, 4, Activation::kTanh}, 55);
  const auto coeffs = model::linearize_check(cfg2, p2);

  auto grad_at = [&](std::uint64_t seed) {
    const auto reg = random_regressor(cfg2, seed);
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (double v : reg) vars.push_back(tape.lift(v));
    const ad::Var out = model::forward(cfg2, p2, tape, vars);
    return tape.backward(out, vars);
  };
  const auto g1 = grad_at(1);
  const auto g2 = grad_at(2);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    CHECK(g1[k] == doctest::Approx(coeffs[k]).epsilon(1e-12));
    CHECK(g1[k] == g2[k]);
  }

  // A unit impulse through the linear network reproduces the response of the
  // FIR model with the same coefficients, once the affine offset (the
  // zero-input response) is removed.
  fir::FirModel firm;
  firm.g = coeffs;
  std::vector<double> impulse(8, 0.0);
  impulse[0] = 1.0;
  const auto fir_y = fir::predict(firm, impulse);
  const std::vector<double> zero_reg(static_cast<std::size_t>(cfg2.regressor_size()), 0.0);
  const double offset = model::forward(cfg2, p2, zero_reg);
  for (std::size_t t = 0; t < impulse.size(); ++t) {
    std::vector<double> reg(static_cast<std::size_t>(cfg2.regressor_size()), 0.0);
    for (int m = 0; m <= cfg2.n_b; ++m) {
      const int idx = static_cast<int>(t) - m;
      reg[static_cast<std::size_t>(m)] = (idx == 0) ? 1.0 : 0.0;
    }
    CHECK(model::forward(cfg2, p2, reg) - offset == doctest::Approx(fir_y[t]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(model::linearize_check({3, 0, 4, Activation::kTanh}, p2), UsageError);
  CHECK_THROWS_AS(model::linearize_check({3, 1, 4, Activation::kIdentity}, p2), UsageError);
}

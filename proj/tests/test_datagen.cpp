// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "core/datagen.hpp"
#include "test_util.hpp"

using namespace narxid;
using datagen::Signal;

namespace {

// Naive DFT magnitude at one bin.
double dft_magnitude(const Signal& s, int bin) {
  std::complex<double> acc(0.0, 0.0);
  const double w = -2.0 * std::numbers::pi * bin / static_cast<double>(s.size());
  for (std::size_t t = 0; t < s.size(); ++t)
    acc += s[t] * std::exp(std::complex<double>(0.0, w * static_cast<double>(t)));
  return std::abs(acc);
}

double sample_variance(const Signal& s) {
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  return var / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("multisine has exactly unit sample variance and zero mean") {
  for (int n : {256, 999, 4096}) {
    const Signal s = datagen::multisine(n, 0.5, 42);
    CHECK(std::fabs(sample_variance(s) - 1.0) < 1e-9);
    double mean = 0.0;
    for (double v : s) mean += v;
    CHECK(std::fabs(mean / n) < 1e-12);
  }
}

TEST_CASE("full-band multisine has a flat amplitude spectrum") {
  for (int n : {512, 1001}) {
    const Signal s = datagen::multisine(n, 0.5, 7);
    const int k_max = (n % 2 == 0) ? n / 2 - 1 : (n - 1) / 2;
    const double ref = dft_magnitude(s, 1);
    for (int k : {2, 3, k_max / 3, k_max / 2, k_max - 1, k_max}) {
      CHECK(std::fabs(dft_magnitude(s, k) - ref) / ref < 1e-6);
    }
  }
}

TEST_CASE("narrow-band multisine has no energy above the band edge") {
  const int n = 1000;
  const Signal s = datagen::multisine(n, 0.1, 11);
  const int k_max = 100;
  const double in_band = dft_magnitude(s, 1);
  double worst = 0.0;
  for (int k = k_max + 1; k <= n / 2; ++k) worst = std::max(worst, dft_magnitude(s, k));
  CHECK(worst / in_band < 1e-10);
}

TEST_CASE("multisine rejects degenerate bands") {
  CHECK_THROWS_AS(datagen::multisine(10, 0.05, 1), UsageError);  // no excited bin
  CHECK_THROWS_AS(datagen::multisine(1, 0.5, 1), UsageError);
  CHECK_THROWS_AS(datagen::multisine(100, 0.7, 1), UsageError);
}

TEST_CASE("benchmark blocks are stable and match the printed coefficients") {
  const auto& g1 = datagen::wh_block_1();
  const auto& g2 = datagen::wh_block_2();
  CHECK(g1.spectral_radius() < 1.0);
  CHECK(g2.spectral_radius() < 1.0);

  const Signal h1 = datagen::impulse_response(g1, 8);
  CHECK(h1[0] == doctest::Approx(0.0451).epsilon(1e-15));
  CHECK(h1[1] == doctest::Approx(0.0902 + 1.3860 * 0.0451).epsilon(1e-12));

  // Steady state of the step response equals the static gain.
  Signal step(4000, 1.0);
  const Signal resp = datagen::lti_filter(g1, step);
  const double expected = (0.0451 + 0.0902 + 0.0451) / (1.0 - 1.3860 + 0.7069);
  CHECK(std::fabs(resp.back() - expected) < 1e-6);
  CHECK(g1.dc_gain() == doctest::Approx(expected).epsilon(1e-15));

  CHECK_THROWS_AS(datagen::LtiBlock({1.0}, {1.0, -1.5}), NumericError);
  CHECK_THROWS_AS(datagen::LtiBlock({1.0}, {2.0, 0.1}), UsageError);
}

TEST_CASE("cascade simulation basics") {
  const Signal zeros(100, 0.0);
  for (double v : datagen::wh_simulate(zeros)) CHECK(v == 0.0);

  // Small-signal regime: tanh is within 0.1% of identity, so the cascade is
  // within 0.1% of the linear chain.
  Signal small = datagen::multisine(400, 0.5, 3);
  for (double& v : small) v *= 1e-4;
  const Signal nonlinear = datagen::wh_simulate(small);
  const Signal linear = datagen::lti_filter(datagen::wh_block_2(),
                                            datagen::lti_filter(datagen::wh_block_1(), small));
  for (std::size_t t = 0; t < small.size(); ++t)
    CHECK(std::fabs(nonlinear[t] - linear[t]) <= 1e-3 * std::fabs(linear[t]) + 1e-18);

  // Odd symmetry: every block is odd or linear.
  const Signal u = datagen::multisine(200, 0.5, 4);
  Signal neg_u = u;
  for (double& v : neg_u) v = -v;
  const Signal y_pos = datagen::wh_simulate(u);
  const Signal y_neg = datagen::wh_simulate(neg_u);
  for (std::size_t t = 0; t < u.size(); ++t) CHECK(y_pos[t] == -y_neg[t]);

  // Output is bounded by the l1 norm of the second block's impulse response
  // (the tanh stage output is within [-1, 1]).
  const Signal h2 = datagen::impulse_response(datagen::wh_block_2(), 200);
  double h2_mass = 0.0;
  for (double v : h2) h2_mass += std::fabs(v);
  const Signal y_big = datagen::wh_simulate(datagen::multisine(5000, 0.5, 5));
  for (double v : y_big) CHECK(std::fabs(v) <= h2_mass);
}

TEST_CASE("experiment generation: splits, noise, reproducibility") {
  const datagen::Experiment exp = datagen::generate_experiment(123);
  CHECK(exp.train.u.size() == 819);
  CHECK(exp.validation.u.size() == 205);
  CHECK(exp.white_test.u.size() == 10000);
  CHECK(exp.colored_test.u.size() == 10000);
  CHECK(exp.train.role == datagen::DatasetRole::kTrain);
  CHECK(exp.colored_test.role == datagen::DatasetRole::kColoredTest);

  // Test sets are noiseless.
  for (std::size_t t = 0; t < 100; ++t) {
    CHECK(exp.white_test.y[t] == exp.white_test.y0[t]);
    CHECK(exp.colored_test.y[t] == exp.colored_test.y0[t]);
  }

  // The training record carries Gaussian noise of the configured size.
  double noise_var = 0.0;
  for (std::size_t t = 0; t < exp.train.u.size(); ++t) {
    const double v = exp.train.y[t] - exp.train.y0[t];
    noise_var += v * v;
  }
  noise_var /= static_cast<double>(exp.train.u.size());
  CHECK(std::sqrt(noise_var) > 0.005);
  CHECK(std::sqrt(noise_var) < 0.015);

  // The split is contiguous: validation continues the training record.
  const datagen::Experiment again = datagen::generate_experiment(123);
  CHECK(again.train.u == exp.train.u);
  CHECK(again.train.y == exp.train.y);
  CHECK(again.colored_test.y == exp.colored_test.y);

  const datagen::Experiment other = datagen::generate_experiment(124);
  CHECK(other.train.u != exp.train.u);
}

TEST_CASE("noise generator hits the requested standard deviation") {
  Rng rng(987);
  const int n = 1000000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = 0.01 * rng.gaussian();
    acc += v * v;
  }
  const double sd = std::sqrt(acc / n);
  CHECK(std::fabs(sd - 0.01) < 0.0001);
}

// SPDX-License-Identifier: Apache-2.0
#include "core/datagen.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace narxid::datagen {

std::string role_name(DatasetRole role) {
  switch (role) {
    case DatasetRole::kTrain: return "train";
    case DatasetRole::kValidation: return "validation";
    case DatasetRole::kWhiteTest: return "white_test";
    case DatasetRole::kColoredTest: return "colored_test";
  }
  return "unknown";
}

DatasetRole role_from_name(const std::string& name) {
  if (name == "train") return DatasetRole::kTrain;
  if (name == "validation") return DatasetRole::kValidation;
  if (name == "white_test") return DatasetRole::kWhiteTest;
  if (name == "colored_test") return DatasetRole::kColoredTest;
  throw DataError("unknown dataset role: " + name);
}

LtiBlock::LtiBlock(std::vector<double> numerator, std::vector<double> denominator)
    : b(std::move(numerator)), a(std::move(denominator)) {
  if (a.empty() || a[0] != 1.0) throw UsageError("LtiBlock: denominator must be monic (a_0 = 1)");
  if (b.empty()) throw UsageError("LtiBlock: empty numerator");
  if (spectral_radius() >= 1.0) throw NumericError("LtiBlock: unstable block (pole outside unit circle)");
}

double LtiBlock::spectral_radius() const {
  const int order = static_cast<int>(a.size()) - 1;
  if (order == 0) return 0.0;
  // Companion matrix of the denominator polynomial.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(order, order);
  for (int i = 0; i < order; ++i) companion(0, i) = -a[static_cast<std::size_t>(i) + 1];
  for (int i = 1; i < order; ++i) companion(i, i - 1) = 1.0;
  const Eigen::VectorXcd eigs = companion.eigenvalues();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) radius = std::max(radius, std::abs(eigs(i)));
  return radius;
}

double LtiBlock::dc_gain() const {
  double num = 0.0, den = 0.0;
  for (double v : b) num += v;
  for (double v : a) den += v;
  return num / den;
}

const LtiBlock& wh_block_1() {
  static const LtiBlock block({0.0451, 0.0902, 0.0451}, {1.0, -1.3860, 0.7069});
  return block;
}

const LtiBlock& wh_block_2() {
  static const LtiBlock block({0.2545, 0.0073, 0.0073, 0.2545},
                              {1.0, -1.1495, 0.7459, -0.0729});
  return block;
}

Signal lti_filter(const LtiBlock& block, std::span<const double> u) {
  const int nb = static_cast<int>(block.b.size());
  const int na = static_cast<int>(block.a.size());
  Signal y(u.size(), 0.0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    double acc = 0.0;
    for (int i = 0; i < nb; ++i)
      if (static_cast<int>(t) - i >= 0) acc += block.b[static_cast<std::size_t>(i)] * u[t - static_cast<std::size_t>(i)];
    for (int j = 1; j < na; ++j)
      if (static_cast<int>(t) - j >= 0) acc -= block.a[static_cast<std::size_t>(j)] * y[t - static_cast<std::size_t>(j)];
    y[t] = acc;
  }
  return y;
}

Signal impulse_response(const LtiBlock& block, int n_taps) {
  Signal impulse(static_cast<std::size_t>(n_taps), 0.0);
  if (n_taps > 0) impulse[0] = 1.0;
  return lti_filter(block, impulse);
}

Signal multisine(int n, double band_fraction, std::uint64_t seed) {
  if (n < 2) throw UsageError("multisine: need at least two samples");
  if (!(band_fraction > 0.0 && band_fraction <= 0.5))
    throw UsageError("multisine: band_fraction must be in (0, 0.5]");
  int k_max = static_cast<int>(std::floor(band_fraction * n));
  // Exclude the Nyquist bin: a random-phase cosine there has no quadrature
  // component and would break the flat amplitude spectrum.
  const int nyquist_cap = (n % 2 == 0) ? n / 2 - 1 : (n - 1) / 2;
  k_max = std::min(k_max, nyquist_cap);
  if (k_max < 1) throw UsageError("multisine: band too narrow, no excited bin");

  Rng rng(derive_seed(seed, 0x6d73696eULL));  // phase stream
  std::vector<double> phase(static_cast<std::size_t>(k_max));
  for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // Sum of cosines, evaluated with a phase-rotation recurrence that is
  // re-synced periodically to keep roundoff drift negligible.
  Signal s(static_cast<std::size_t>(n), 0.0);
  for (int k = 1; k <= k_max; ++k) {
    const double w = 2.0 * std::numbers::pi * k / n;
    const double p0 = phase[static_cast<std::size_t>(k - 1)];
    const double cw = std::cos(w), sw = std::sin(w);
    double c = 0.0, si = 0.0;
    for (int t = 0; t < n; ++t) {
      if (t % 256 == 0) {
        c = std::cos(w * t + p0);
        si = std::sin(w * t + p0);
      }
      s[static_cast<std::size_t>(t)] += c;
      const double cn = c * cw - si * sw;
      si = c * sw + si * cw;
      c = cn;
    }
  }

  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  var /= n;
  if (var <= 0.0) throw NumericError("multisine: degenerate signal");
  const double scale = 1.0 / std::sqrt(var);
  for (double& v : s) v = (v - mean) * scale;
  return s;
}

Signal wh_simulate(std::span<const double> u) {
  Signal mid = lti_filter(wh_block_1(), u);
  for (double& v : mid) v = std::tanh(v);
  return lti_filter(wh_block_2(), mid);
}

Experiment generate_experiment(std::uint64_t seed, const ExperimentConfig& cfg) {
  if (cfg.n_train_record < 5) throw UsageError("generate_experiment: training record too short");
  if (cfg.n_test < 2) throw UsageError("generate_experiment: test record too short");
  if (cfg.sigma_v < 0.0) throw UsageError("generate_experiment: sigma_v must be >= 0");

  Experiment exp;
  exp.seed = seed;
  exp.config = cfg;

  const Signal u_record = multisine(cfg.n_train_record, cfg.train_band_fraction,
                                    derive_seed(seed, 1));
  const Signal y0_record = wh_simulate(u_record);
  Signal y_record = y0_record;
  Rng noise(derive_seed(seed, 2));
  for (double& v : y_record) v += cfg.sigma_v * noise.gaussian();

  const int n_train = static_cast<int>(std::floor(0.8 * cfg.n_train_record));
  auto slice = [](const Signal& s, int lo, int hi) {
    return Signal(s.begin() + lo, s.begin() + hi);
  };
  exp.train = {slice(u_record, 0, n_train), slice(y_record, 0, n_train),
               slice(y0_record, 0, n_train), DatasetRole::kTrain};
  exp.validation = {slice(u_record, n_train, cfg.n_train_record),
                    slice(y_record, n_train, cfg.n_train_record),
                    slice(y0_record, n_train, cfg.n_train_record), DatasetRole::kValidation};

  const Signal u_white = multisine(cfg.n_test, cfg.white_band_fraction, derive_seed(seed, 3));
  const Signal y0_white = wh_simulate(u_white);
  exp.white_test = {u_white, y0_white, y0_white, DatasetRole::kWhiteTest};

  const Signal u_colored = multisine(cfg.n_test, cfg.colored_band_fraction, derive_seed(seed, 4));
  const Signal y0_colored = wh_simulate(u_colored);
  exp.colored_test = {u_colored, y0_colored, y0_colored, DatasetRole::kColoredTest};

  return exp;
}

}  // namespace narxid::datagen

// SPDX-License-Identifier: Apache-2.0
#include "core/mlp.hpp"

namespace narxid::model {

MlpParams MlpParams::zeros(const NarxConfig& cfg) {
  cfg.validate();
  MlpParams p;
  p.w_in_u = Eigen::MatrixXd::Zero(cfg.q, cfg.n_b + 1);
  p.w_in_y = Eigen::MatrixXd::Zero(cfg.q, cfg.n_a);
  p.b_hidden = Eigen::VectorXd::Zero(cfg.q);
  p.w_out = Eigen::VectorXd::Zero(cfg.q);
  p.b_out = 0.0;
  return p;
}

int MlpParams::flat_size() const {
  return static_cast<int>(w_in_u.size() + w_in_y.size() + b_hidden.size() + w_out.size() + 1);
}

Eigen::VectorXd MlpParams::to_flat() const {
  Eigen::VectorXd flat(flat_size());
  int at = 0;
  for (int i = 0; i < w_in_u.rows(); ++i)
    for (int j = 0; j < w_in_u.cols(); ++j) flat(at++) = w_in_u(i, j);
  for (int i = 0; i < w_in_y.rows(); ++i)
    for (int j = 0; j < w_in_y.cols(); ++j) flat(at++) = w_in_y(i, j);
  for (int i = 0; i < b_hidden.size(); ++i) flat(at++) = b_hidden(i);
  for (int i = 0; i < w_out.size(); ++i) flat(at++) = w_out(i);
  flat(at++) = b_out;
  return flat;
}

MlpParams MlpParams::from_flat(const NarxConfig& cfg, const Eigen::VectorXd& flat) {
  cfg.validate();
  MlpParams p = zeros(cfg);
  if (flat.size() != p.flat_size())
    throw UsageError("MlpParams::from_flat: flat vector length does not match config");
  int at = 0;
  for (int i = 0; i < p.w_in_u.rows(); ++i)
    for (int j = 0; j < p.w_in_u.cols(); ++j) p.w_in_u(i, j) = flat(at++);
  for (int i = 0; i < p.w_in_y.rows(); ++i)
    for (int j = 0; j < p.w_in_y.cols(); ++j) p.w_in_y(i, j) = flat(at++);
  for (int i = 0; i < p.b_hidden.size(); ++i) p.b_hidden(i) = flat(at++);
  for (int i = 0; i < p.w_out.size(); ++i) p.w_out(i) = flat(at++);
  p.b_out = flat(at++);
  return p;
}

MlpParams init_params(const NarxConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  MlpParams p = MlpParams::zeros(cfg);
  Rng rng(seed);
  const double hidden_bound = std::sqrt(1.0 / cfg.regressor_size());
  for (int i = 0; i < cfg.q; ++i)
    for (int j = 0; j < cfg.n_b + 1; ++j) p.w_in_u(i, j) = rng.uniform(-hidden_bound, hidden_bound);
  for (int i = 0; i < cfg.q; ++i)
    for (int j = 0; j < cfg.n_a; ++j) p.w_in_y(i, j) = rng.uniform(-hidden_bound, hidden_bound);
  const double out_bound = std::sqrt(1.0 / cfg.q);
  for (int i = 0; i < cfg.q; ++i) p.w_out(i) = rng.uniform(-out_bound, out_bound);
  return p;
}

double forward(const NarxConfig& cfg, const MlpParams& params,
               std::span<const double> regressor) {
  return forward_generic<double>(cfg, params, regressor, [](double c) { return c; });
}

ad::Var forward(const NarxConfig& cfg, const MlpParams& params, ad::Tape& tape,
                std::span<const ad::Var> regressor) {
  return forward_generic<ad::Var>(cfg, params, regressor,
                                  [&tape](double c) { return tape.lift(c); });
}

std::vector<double> linearize_check(const NarxConfig& cfg, const MlpParams& params) {
  if (cfg.activation != Activation::kIdentity)
    throw UsageError("linearize_check: requires identity activation");
  if (cfg.n_a != 0) throw UsageError("linearize_check: requires n_a = 0");
  // d yhat / d u(t-k) = sum_i w_out_i * w_in_u(i, k), constant in the regressor.
  std::vector<double> g(static_cast<std::size_t>(cfg.n_b) + 1, 0.0);
  for (int k = 0; k <= cfg.n_b; ++k) {
    double acc = 0.0;
    for (int i = 0; i < cfg.q; ++i) acc += params.w_out(i) * params.w_in_u(i, k);
    g[static_cast<std::size_t>(k)] = acc;
  }
  return g;
}

}  // namespace narxid::model

// SPDX-License-Identifier: Apache-2.0
//
// Single-hidden-layer feedforward network mapping a regressor of delayed
// inputs/outputs to a scalar output.
//
// Regressor wire order (also the order used on disk):
//   [u(t), u(t-1), ..., u(t-n_b), y(t-1), ..., y(t-n_a)]

#ifndef NARXID_CORE_MLP_HPP
#define NARXID_CORE_MLP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "core/autodiff.hpp"
#include "core/common.hpp"

namespace narxid::model {

enum class Activation : std::uint8_t {
  kTanh,
  kIdentity,  // linear mode, used to cross-check against FIR theory
};

struct NarxConfig {
  int n_b = 0;  // input lags beyond u(t)
  int n_a = 0;  // output lags
  int q = 1;    // hidden units
  Activation activation = Activation::kTanh;

  int regressor_size() const { return n_b + 1 + n_a; }
  void validate() const {
    if (n_b < 0 || n_a < 0 || q < 1) throw UsageError("NarxConfig: need n_b>=0, n_a>=0, q>=1");
  }
  bool operator==(const NarxConfig&) const = default;
};

// All weights and biases. Flat layout, in order:
//   w_in_u (q rows x (n_b+1), row-major), w_in_y (q x n_a, row-major),
//   b_hidden (q), w_out (q), b_out.
struct MlpParams {
  Eigen::MatrixXd w_in_u;   // q x (n_b+1)
  Eigen::MatrixXd w_in_y;   // q x n_a
  Eigen::VectorXd b_hidden; // q
  Eigen::VectorXd w_out;    // q
  double b_out = 0.0;

  static MlpParams zeros(const NarxConfig& cfg);

  int flat_size() const;
  Eigen::VectorXd to_flat() const;
  static MlpParams from_flat(const NarxConfig& cfg, const Eigen::VectorXd& flat);

  bool matches(const NarxConfig& cfg) const {
    return w_in_u.rows() == cfg.q && w_in_u.cols() == cfg.n_b + 1 && w_in_y.rows() == cfg.q &&
           w_in_y.cols() == cfg.n_a && b_hidden.size() == cfg.q && w_out.size() == cfg.q;
  }
};

// Weights uniform on [-sqrt(1/fan_in), +sqrt(1/fan_in)] per layer, biases
// zero; reproducible from the seed.
MlpParams init_params(const NarxConfig& cfg, std::uint64_t seed);

namespace detail {
inline double activate(double z, Activation act) {
  return act == Activation::kTanh ? std::tanh(z) : z;
}
inline ad::Var activate(ad::Var z, Activation act) {
  return act == Activation::kTanh ? ad::tanh(z) : z;
}
}  // namespace detail

// Scalar-generic forward pass; S is double or ad::Var. Accumulation order is
// fixed (left to right), so the taped and plain paths agree bit for bit.
template <class S>
S forward_generic(const NarxConfig& cfg, const MlpParams& params, std::span<const S> regressor,
                  auto lift) {
  if (static_cast<int>(regressor.size()) != cfg.regressor_size())
    throw UsageError("forward: regressor length does not match config");
  const int nu = cfg.n_b + 1;
  S out = lift(params.b_out);
  for (int i = 0; i < cfg.q; ++i) {
    S z = lift(params.b_hidden(i));
    for (int j = 0; j < nu; ++j) z = z + lift(params.w_in_u(i, j)) * regressor[j];
    for (int j = 0; j < cfg.n_a; ++j) z = z + lift(params.w_in_y(i, j)) * regressor[nu + j];
    out = out + lift(params.w_out(i)) * detail::activate(z, cfg.activation);
  }
  return out;
}

double forward(const NarxConfig& cfg, const MlpParams& params, std::span<const double> regressor);

ad::Var forward(const NarxConfig& cfg, const MlpParams& params, ad::Tape& tape,
                std::span<const ad::Var> regressor);

// For identity activation and n_a = 0 the network collapses to a linear FIR
// filter; returns its induced impulse-response coefficients g_0..g_{n_b}
// (the input-derivatives of forward, independent of the regressor value).
std::vector<double> linearize_check(const NarxConfig& cfg, const MlpParams& params);

}  // namespace narxid::model

#endif  // NARXID_CORE_MLP_HPP

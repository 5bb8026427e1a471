// SPDX-License-Identifier: Apache-2.0
//
// Batched loss/gradient evaluation for the training loop.
//
// These contexts implement the same losses as narx.hpp but vectorized with
// Eigen and with hand-unrolled reverse-mode sweeps, so that a full-batch
// epoch costs milliseconds instead of seconds. The derivative-penalty
// gradient is exact: with the penalty  P = sum_k w_k * mean_a d_k(a)^2  and
// d = grad_u of the depth-T simulation, grad_theta P is computed by seeding a
// tangent (directional-derivative) pass through the simulation with the
// detached direction v = dP/dd and reverse-sweeping that pass with respect to
// the parameters. Unit tests pin all three paths against the scalar tape and
// central finite differences.
//
// A context precomputes everything that depends only on the data (lag
// matrices, anchor windows) and owns its scratch buffers; it is cheap to
// build, but not thread-safe — use one instance per worker.

#ifndef NARXID_CORE_NARX_GRAD_HPP
#define NARXID_CORE_NARX_GRAD_HPP

#include <Eigen/Dense>

#include "core/narx.hpp"

namespace narxid::narx {

struct LossGrad {
  double value = 0.0;
  Eigen::VectorXd grad;  // flat layout, matching MlpParams::to_flat
};

// One-step prediction MSE over all times with full lag windows.
class PredictionContext {
 public:
  PredictionContext(const NarxConfig& cfg, const Series& data);

  double loss(const MlpParams& params);
  LossGrad loss_grad(const MlpParams& params);
  int sample_count() const { return static_cast<int>(ru_.rows()); }

  // Measured outputs / one-step predictions for the valid time range, for
  // metric evaluation.
  const Eigen::VectorXd& targets() const { return y_; }
  Eigen::VectorXd predictions(const MlpParams& params);

 private:
  void forward(const MlpParams& params);

  NarxConfig cfg_;
  Eigen::MatrixXd ru_;  // M x (n_b+1), wire order
  Eigen::MatrixXd ry_;  // M x n_a, wire order
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_, h_;
  Eigen::VectorXd e_;
};

// Free-run simulation MSE with backpropagation through the full unrolled
// recursion (no truncation).
class SimulationContext {
 public:
  SimulationContext(const NarxConfig& cfg, const Series& data);

  double loss(const MlpParams& params);
  LossGrad loss_grad(const MlpParams& params);
  int sample_count() const { return static_cast<int>(ru_.rows()); }

 private:
  void forward(const MlpParams& params);

  NarxConfig cfg_;
  Eigen::MatrixXd ru_;     // M x (n_b+1), zero-padded before record start
  Eigen::VectorXd y_;      // measured outputs for times n_a..n-1
  Eigen::VectorXd y_seed_; // measured outputs for times 0..n_a-1
  Eigen::MatrixXd x_, ryhat_;
  Eigen::VectorXd e_;
};

// Prediction MSE plus the exponentially weighted input-sensitivity penalty of
// the depth-T closed-loop simulation, evaluated at every anchor (subsampled
// by the stride) and normalized by the anchor count.
class RegularizedContext {
 public:
  RegularizedContext(const NarxConfig& cfg, const Series& data, int t_steps, int anchor_stride);

  double loss(const MlpParams& params, double alpha, double gamma);
  LossGrad loss_grad(const MlpParams& params, double alpha, double gamma);

  int anchor_count() const { return n_anchors_; }
  // Mean |d_k| over anchors for k = 0..T at the given parameters (the decay
  // profile of the model on this data).
  Eigen::VectorXd mean_abs_sensitivities(const MlpParams& params);

 private:
  // Primal simulation at all anchors plus the first-order sweep that fills
  // the sensitivity matrix d_.
  void forward_and_sensitivities(const MlpParams& params);

  NarxConfig cfg_;
  int t_steps_ = 1;
  int n_anchors_ = 0;
  PredictionContext pred_;

  // Step-stacked constants: rows [i*A, (i+1)*A) belong to simulation step i.
  Eigen::MatrixXd ul_big_;  // (T*A) x (n_b+1) input lags, wire order
  Eigen::MatrixXd ym_;      // A x n_a measured lag template (predicted cols overwritten)

  // Scratch, step-stacked like ul_big_.
  Eigen::MatrixXd x_big_, yl_big_, b_big_;
  Eigen::MatrixXd zd_big_, xd_big_, vl_big_, yld_big_;
  Eigen::MatrixXd yhat_, mu_, d_;
};

}  // namespace narxid::narx

#endif  // NARXID_CORE_NARX_GRAD_HPP

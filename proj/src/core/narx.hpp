// SPDX-License-Identifier: Apache-2.0
//
// NARX dynamics on top of the hidden-layer network: one-step prediction,
// depth-T closed-loop simulation, free-run simulation, input sensitivities
// of the simulated output, and the three training losses.
//
// Depth convention: simulate_steps(..., T) chains T one-step predictions for
// times t, t+1, ..., t+T-1 and returns the last one. Measured outputs are
// consumed only for lags strictly before time t; later lags are the model's
// own predictions. With T = 1 this is exactly predict_one_step.

#ifndef NARXID_CORE_NARX_HPP
#define NARXID_CORE_NARX_HPP

#include <optional>
#include <span>
#include <vector>

#include "core/mlp.hpp"

namespace narxid::narx {

using model::MlpParams;
using model::NarxConfig;

// Derivative-regularizer hyperparameters (cost weight gamma, per-delay decay
// base alpha, simulation depth, anchor subsampling).
struct RegConfig {
  double alpha = 0.7;
  double gamma = 0.0;
  int t_steps = 1;
  int anchor_stride = 1;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("RegConfig: alpha must be in [0,1]");
    if (!(gamma >= 0.0)) throw UsageError("RegConfig: gamma must be >= 0");
    if (t_steps < 1) throw UsageError("RegConfig: t_steps must be >= 1");
    if (anchor_stride < 1) throw UsageError("RegConfig: anchor_stride must be >= 1");
  }
};

// One simulation window anchored at time t. Both windows are stored in
// ascending time order:
//   u_window = u(t-n_b) ... u(t+T-1)        (length n_b + T)
//   y_seed   = y(t-n_a) ... y(t-1)          (length n_a)
struct SimBuffer {
  std::vector<double> u_window;
  std::vector<double> y_seed;
};

// In-memory dataset view used by the losses: equal-length input/output
// records.
struct Series {
  std::span<const double> u;
  std::span<const double> y;
};

double predict_one_step(const NarxConfig& cfg, const MlpParams& params,
                        std::span<const double> u_window, std::span<const double> y_window);

// Chains T predictions; returns yhat at time t+T-1. If `trace` is non-null it
// receives all T intermediate predictions.
double simulate_steps(const NarxConfig& cfg, const MlpParams& params, const SimBuffer& buf,
                      int t_steps, std::vector<double>* trace = nullptr);

// Closed-loop simulation over a whole record. The returned sequence has the
// same length as u; entries [0, n_a) are copies of y_init, entries from n_a
// on are model predictions fed back as delayed outputs. Input lags before the
// record start are zero.
std::vector<double> simulate_free_run(const NarxConfig& cfg, const MlpParams& params,
                                      std::span<const double> u, std::span<const double> y_init);

// d_k = d yhat(t+T-1) / d u(t+T-1-k) for k = 0..T, from one taped simulation
// and one reverse sweep. Sensitivities to inputs outside the window are 0.
std::vector<double> input_sensitivities(const NarxConfig& cfg, const MlpParams& params,
                                        const SimBuffer& buf, int t_steps);

// Taped variants for building differentiable expressions on top of the
// simulation (second-order paths, oracle tests).
ad::Var simulate_steps_taped(const NarxConfig& cfg, const MlpParams& params, ad::Tape& tape,
                             std::span<const ad::Var> u_window, std::span<const ad::Var> y_seed,
                             int t_steps);

// First anchor time and one-past-the-last anchor time for the regularizer on
// a record of length n: full lag windows and a depth-T simulation must fit.
struct AnchorRange {
  int first = 0;
  int last = 0;  // exclusive
  int count(int stride) const { return last > first ? (last - first + stride - 1) / stride : 0; }
};
AnchorRange anchor_range(const NarxConfig& cfg, int record_length, int t_steps);

SimBuffer make_sim_buffer(const NarxConfig& cfg, const Series& data, int anchor, int t_steps);

// Mean squared one-step prediction error over all times with full lag
// windows.
double loss_prediction(const NarxConfig& cfg, const MlpParams& params, const Series& data);

// loss_prediction plus gamma * sum_k alpha^{-k} * mean_anchors d_k^2.
// gamma = 0 short-circuits to loss_prediction exactly.
double loss_regularized(const NarxConfig& cfg, const MlpParams& params, const Series& data,
                        const RegConfig& reg);

// Mean squared free-run simulation error (first n_a samples excluded).
double loss_simulation(const NarxConfig& cfg, const MlpParams& params, const Series& data);

}  // namespace narxid::narx

#endif  // NARXID_CORE_NARX_HPP

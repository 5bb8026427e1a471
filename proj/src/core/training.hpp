// SPDX-License-Identifier: Apache-2.0
//
// Parameter optimization: Adam with bias correction, full-batch training with
// early stopping on a validation criterion, and hyperparameter grid search.

#ifndef NARXID_CORE_TRAINING_HPP
#define NARXID_CORE_TRAINING_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "core/narx_grad.hpp"

namespace narxid::training {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  AdamConfig config;

  explicit AdamState(Eigen::Index size, AdamConfig cfg = {})
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)), config(cfg) {}
};

// One in-place update. Throws NumericError on non-finite gradients.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad);

enum class LossKind { kPrediction, kDerivativeRegularized, kSimulation };
enum class EsCriterion { kPredictionVal, kSimulationVal };

struct TrainSpec {
  LossKind loss = LossKind::kPrediction;
  int max_epochs = 10000;
  int batch_size = 1024;
  int patience = 1000;
  EsCriterion criterion = EsCriterion::kPredictionVal;
  std::optional<narx::RegConfig> reg;  // present iff loss == kDerivativeRegularized
  AdamConfig adam;

  // record_length: training record size, used to confirm full-batch training.
  void validate(int record_length) const;
};

struct TrainReport {
  narx::MlpParams best_params;
  double best_val = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  // trace[e] = {training loss, validation criterion}; entry 0 is the initial
  // parameters (loss before any update).
  std::vector<std::array<double, 2>> trace;
};

// Full-batch training: one gradient step per epoch, validation criterion
// evaluated after each step, best-so-far snapshot returned. Stops after
// `patience` epochs without improvement or at max_epochs.
TrainReport train(const narx::NarxConfig& cfg, const narx::MlpParams& init,
                  const narx::Series& train_data, const narx::Series& val_data,
                  const TrainSpec& spec);

struct GridPoint {
  double alpha = 0.0;
  double gamma = 0.0;
  double best_val = 0.0;
};

struct GridSearchResult {
  double alpha = 0.0;
  double gamma = 0.0;
  TrainReport report;
  std::vector<GridPoint> points;  // alpha-major enumeration order
};

// Trains one model per (alpha, gamma), all from the same initial parameters,
// and returns the pair with the smallest validation criterion (ties keep the
// earliest point in enumeration order). Points may be dispatched to a worker
// pool; results are merged in enumeration order so the outcome does not
// depend on scheduling.
GridSearchResult grid_search(const narx::NarxConfig& cfg, const narx::MlpParams& init,
                             const narx::Series& train_data, const narx::Series& val_data,
                             const std::vector<double>& alpha_grid,
                             const std::vector<double>& gamma_grid, const TrainSpec& base_spec,
                             int n_threads);

}  // namespace narxid::training

#endif  // NARXID_CORE_TRAINING_HPP

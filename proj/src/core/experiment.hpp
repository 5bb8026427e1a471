// SPDX-License-Identifier: Apache-2.0
//
// Benchmark orchestration: the two model-order cases, the desk/full run
// profiles, per-run model estimation (FIR baseline, early-stopped network,
// derivative-regularized network via grid search, output-error network),
// Monte-Carlo repetition, and the file bundle written by `reproduce`.

#ifndef NARXID_CORE_EXPERIMENT_HPP
#define NARXID_CORE_EXPERIMENT_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/io.hpp"

namespace narxid::experiment {

struct OrderConfig {
  int q = 0;
  int n_a = 0;
  int n_b = 0;
};

// High model order: q=20, lags 30. Optimized model order: q=10, lags 15.
OrderConfig order_case_config(metrics::OrderCase c);

struct RunProfile {
  std::string name = "desk";
  int runs = 3;
  std::vector<metrics::OrderCase> cases = {metrics::OrderCase::kHmo, metrics::OrderCase::kOmo};
  int max_epochs = 3000;
  int patience = 300;
  int batch_size = 1024;
  int t_steps = 50;
  int anchor_stride = 4;
  std::vector<double> alpha_grid;
  std::vector<double> gamma_grid;
  training::AdamConfig adam;
  datagen::ExperimentConfig data;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

RunProfile desk_profile();
RunProfile full_profile();

struct ModelOutcome {
  metrics::ModelKind kind = metrics::ModelKind::kEs;
  io::TrainedModel model;
  double best_val = 0.0;
  int epochs_run = 0;
  // Chosen regularizer hyperparameters (derivative-regularized model only).
  double alpha = 0.0;
  double gamma = 0.0;
};

struct CaseResult {
  metrics::OrderCase order_case = metrics::OrderCase::kHmo;
  bool ok = false;
  std::string error;
  std::vector<ModelOutcome> models;
  std::vector<training::GridPoint> grid_points;
};

struct RunResult {
  int run = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t init_seed = 0;
  std::vector<CaseResult> cases;
};

struct MonteCarloResult {
  std::vector<metrics::MetricRecord> records;
  std::vector<RunResult> runs;
  // Decay profile of the run-0 HMO derivative-regularized model on its
  // training split (mean |d_k| for k = 0..T); empty if unavailable.
  std::vector<double> decay_profile;
};

// Estimates one model kind on an experiment's data. `reg` is required for the
// derivative-regularized kind (single point; use grid_search_models for the
// full scan).
ModelOutcome estimate_model(metrics::ModelKind kind, const OrderConfig& order,
                            const datagen::Experiment& data, std::uint64_t init_seed,
                            const training::TrainSpec& base_spec,
                            const narx::RegConfig* reg);

// NRMSE records for one model on the train/white/colored sets, in one-step
// (networks only) and free-run simulation modes.
std::vector<metrics::MetricRecord> evaluate_model(const io::TrainedModel& model,
                                                  const datagen::Experiment& data,
                                                  metrics::OrderCase order_case,
                                                  metrics::ModelKind kind, int run);

// Full Monte-Carlo protocol: per run, fresh data/init seeds derived from the
// master seed, all four model kinds per order case. Individual run/case
// failures are recorded, not fatal; medians later run over the successes.
MonteCarloResult monte_carlo(const RunProfile& profile);

// Runs monte_carlo and writes the result bundle (records, median tables,
// boxplot quantiles, decay profile, hyperparameters, manifest, run-0 models)
// into out_dir. Returns the summary tables rendered as JSON.
std::string reproduce(const RunProfile& profile, const std::filesystem::path& out_dir);

// Median tables in the benchmark layout; exposed for tests.
std::string render_table(const std::vector<metrics::MetricRecord>& records,
                         metrics::EvalMode mode);

}  // namespace narxid::experiment

#endif  // NARXID_CORE_EXPERIMENT_HPP

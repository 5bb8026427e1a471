// SPDX-License-Identifier: Apache-2.0
#include "core/training.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace narxid::training {

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != grad.size() || state.m.size() != grad.size())
    throw UsageError("adam_step: size mismatch");
  if (!grad.allFinite()) throw NumericError("adam_step: non-finite gradient");
  const AdamConfig& c = state.config;
  ++state.step;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grad;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  const double m_corr = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double v_corr = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  params -= (c.lr / m_corr) * state.m.cwiseQuotient(
                ((state.v / v_corr).cwiseSqrt().array() + c.eps).matrix());
}

void TrainSpec::validate(int record_length) const {
  if (max_epochs < 1) throw UsageError("TrainSpec: max_epochs must be >= 1");
  if (patience < 1) throw UsageError("TrainSpec: patience must be >= 1");
  if (patience > max_epochs) throw UsageError("TrainSpec: patience must not exceed max_epochs");
  if (batch_size < record_length)
    throw UsageError("TrainSpec: training is full-batch; batch_size must cover the record");
  const bool needs_reg = loss == LossKind::kDerivativeRegularized;
  if (needs_reg != reg.has_value())
    throw UsageError("TrainSpec: reg config must be present exactly for the regularized loss");
  if (reg) reg->validate();
}

namespace {

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kPrediction: return "prediction";
    case LossKind::kDerivativeRegularized: return "derivative_regularized";
    case LossKind::kSimulation: return "simulation";
  }
  return "unknown";
}

}  // namespace

TrainReport train(const narx::NarxConfig& cfg, const narx::MlpParams& init,
                  const narx::Series& train_data, const narx::Series& val_data,
                  const TrainSpec& spec) {
  spec.validate(static_cast<int>(train_data.u.size()));
  if (!init.matches(cfg)) throw UsageError("train: initial parameters do not match config");

  std::optional<narx::PredictionContext> pred_ctx;
  std::optional<narx::SimulationContext> sim_ctx;
  std::optional<narx::RegularizedContext> reg_ctx;
  switch (spec.loss) {
    case LossKind::kPrediction:
      pred_ctx.emplace(cfg, train_data);
      break;
    case LossKind::kDerivativeRegularized:
      reg_ctx.emplace(cfg, train_data, spec.reg->t_steps, spec.reg->anchor_stride);
      break;
    case LossKind::kSimulation:
      sim_ctx.emplace(cfg, train_data);
      break;
  }
  std::optional<narx::PredictionContext> val_pred;
  std::optional<narx::SimulationContext> val_sim;
  if (spec.criterion == EsCriterion::kPredictionVal)
    val_pred.emplace(cfg, val_data);
  else
    val_sim.emplace(cfg, val_data);

  auto train_loss_grad = [&](const narx::MlpParams& p) -> narx::LossGrad {
    switch (spec.loss) {
      case LossKind::kPrediction:
        return pred_ctx->loss_grad(p);
      case LossKind::kDerivativeRegularized:
        return reg_ctx->loss_grad(p, spec.reg->alpha, spec.reg->gamma);
      case LossKind::kSimulation:
        return sim_ctx->loss_grad(p);
    }
    throw UsageError("train: unknown loss kind");
  };
  auto train_loss = [&](const narx::MlpParams& p) {
    switch (spec.loss) {
      case LossKind::kPrediction:
        return pred_ctx->loss(p);
      case LossKind::kDerivativeRegularized:
        return reg_ctx->loss(p, spec.reg->alpha, spec.reg->gamma);
      case LossKind::kSimulation:
        return sim_ctx->loss(p);
    }
    throw UsageError("train: unknown loss kind");
  };
  auto criterion = [&](const narx::MlpParams& p) {
    return val_pred ? val_pred->loss(p) : val_sim->loss(p);
  };

  TrainReport report;
  Eigen::VectorXd flat = init.to_flat();
  AdamState adam(flat.size(), spec.adam);

  narx::MlpParams current = init;
  report.best_params = init;
  report.best_val = criterion(init);
  report.best_epoch = 0;
  report.trace.push_back({train_loss(init), report.best_val});

  int since_improvement = 0;
  for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    narx::LossGrad lg;
    try {
      lg = train_loss_grad(current);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "training aborted at epoch " << epoch << " (" << loss_name(spec.loss)
          << " loss): " << e.what();
      throw NumericError(msg.str());
    }
    if (!std::isfinite(lg.value) || !lg.grad.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite " << loss_name(spec.loss) << " loss or gradient at epoch " << epoch;
      throw NumericError(msg.str());
    }
    adam_step(adam, flat, lg.grad);
    current = narx::MlpParams::from_flat(cfg, flat);

    const double val = criterion(current);
    report.trace.push_back({lg.value, val});
    report.epochs_run = epoch;
    if (val < report.best_val) {
      report.best_val = val;
      report.best_params = current;
      report.best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (since_improvement >= spec.patience) break;
  }
  return report;
}

GridSearchResult grid_search(const narx::NarxConfig& cfg, const narx::MlpParams& init,
                             const narx::Series& train_data, const narx::Series& val_data,
                             const std::vector<double>& alpha_grid,
                             const std::vector<double>& gamma_grid, const TrainSpec& base_spec,
                             int n_threads) {
  if (alpha_grid.empty() || gamma_grid.empty())
    throw UsageError("grid_search: grids must be non-empty");
  if (base_spec.loss != LossKind::kDerivativeRegularized || !base_spec.reg)
    throw UsageError("grid_search: base spec must use the regularized loss");

  struct Point {
    double alpha, gamma;
  };
  std::vector<Point> points;
  for (double a : alpha_grid)
    for (double g : gamma_grid) points.push_back({a, g});

  std::vector<std::optional<TrainReport>> reports(points.size());
  std::vector<std::exception_ptr> errors(points.size());

  auto run_point = [&](std::size_t i) {
    TrainSpec spec = base_spec;
    spec.reg->alpha = points[i].alpha;
    spec.reg->gamma = points[i].gamma;
    try {
      reports[i] = train(cfg, init, train_data, val_data, spec);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int workers =
      std::clamp<int>(n_threads, 1, static_cast<int>(points.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1))
          run_point(i);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "grid point (alpha=" << points[i].alpha << ", gamma=" << points[i].gamma
            << "): " << e.what();
        throw NumericError(msg.str());
      }
    }
  }

  GridSearchResult result;
  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    result.points.push_back({points[i].alpha, points[i].gamma, reports[i]->best_val});
    if (reports[i]->best_val < reports[best]->best_val) best = i;
  }
  result.alpha = points[best].alpha;
  result.gamma = points[best].gamma;
  result.report = std::move(*reports[best]);
  return result;
}

}  // namespace narxid::training

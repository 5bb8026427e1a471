// SPDX-License-Identifier: Apache-2.0
#include "core/narx.hpp"

#include <algorithm>
#include <cmath>

namespace narxid::narx {

namespace {

// Shared recursion for the plain and taped paths; S is double or ad::Var.
// u_window/y_seed are in ascending time order, the regressor is built in wire
// order, and the per-step operation order is identical in both paths.
template <class S, class Lift>
S simulate_generic(const NarxConfig& cfg, const MlpParams& params, std::span<const S> u_window,
                   std::span<const S> y_seed, int t_steps, Lift lift, std::vector<S>* trace) {
  cfg.validate();
  if (t_steps < 1) throw UsageError("simulate: t_steps must be >= 1");
  if (static_cast<int>(u_window.size()) != cfg.n_b + t_steps)
    throw UsageError("simulate: u_window must have length n_b + t_steps");
  if (static_cast<int>(y_seed.size()) != cfg.n_a)
    throw UsageError("simulate: y_seed must have length n_a");

  const int nu = cfg.n_b + 1;
  std::vector<S> regressor(static_cast<std::size_t>(cfg.regressor_size()));
  std::vector<S> preds;
  preds.reserve(static_cast<std::size_t>(t_steps));
  for (int i = 0; i < t_steps; ++i) {
    for (int m = 0; m <= cfg.n_b; ++m)
      regressor[static_cast<std::size_t>(m)] = u_window[static_cast<std::size_t>(i + cfg.n_b - m)];
    for (int l = 1; l <= cfg.n_a; ++l) {
      regressor[static_cast<std::size_t>(nu - 1 + l)] =
          (i - l >= 0) ? preds[static_cast<std::size_t>(i - l)]
                       : y_seed[static_cast<std::size_t>(cfg.n_a + i - l)];
    }
    preds.push_back(model::forward_generic<S>(cfg, params, regressor, lift));
  }
  if (trace) *trace = preds;
  return preds.back();
}

}  // namespace

double predict_one_step(const NarxConfig& cfg, const MlpParams& params,
                        std::span<const double> u_window, std::span<const double> y_window) {
  cfg.validate();
  if (static_cast<int>(u_window.size()) != cfg.n_b + 1)
    throw UsageError("predict_one_step: u_window must have length n_b + 1");
  if (static_cast<int>(y_window.size()) != cfg.n_a)
    throw UsageError("predict_one_step: y_window must have length n_a");
  std::vector<double> regressor(static_cast<std::size_t>(cfg.regressor_size()));
  for (int m = 0; m <= cfg.n_b; ++m)
    regressor[static_cast<std::size_t>(m)] = u_window[static_cast<std::size_t>(cfg.n_b - m)];
  for (int l = 1; l <= cfg.n_a; ++l)
    regressor[static_cast<std::size_t>(cfg.n_b + l)] =
        y_window[static_cast<std::size_t>(cfg.n_a - l)];
  return model::forward(cfg, params, regressor);
}

double simulate_steps(const NarxConfig& cfg, const MlpParams& params, const SimBuffer& buf,
                      int t_steps, std::vector<double>* trace) {
  return simulate_generic<double>(
      cfg, params, std::span<const double>(buf.u_window), std::span<const double>(buf.y_seed),
      t_steps, [](double c) { return c; }, trace);
}

ad::Var simulate_steps_taped(const NarxConfig& cfg, const MlpParams& params, ad::Tape& tape,
                             std::span<const ad::Var> u_window, std::span<const ad::Var> y_seed,
                             int t_steps) {
  return simulate_generic<ad::Var>(
      cfg, params, u_window, y_seed, t_steps, [&tape](double c) { return tape.lift(c); },
      nullptr);
}

std::vector<double> simulate_free_run(const NarxConfig& cfg, const MlpParams& params,
                                      std::span<const double> u,
                                      std::span<const double> y_init) {
  cfg.validate();
  const int n = static_cast<int>(u.size());
  if (n <= cfg.n_b) throw UsageError("simulate_free_run: record shorter than input lags");
  if (static_cast<int>(y_init.size()) != cfg.n_a)
    throw UsageError("simulate_free_run: y_init must have length n_a");
  if (cfg.n_a > n) throw UsageError("simulate_free_run: record shorter than output lags");

  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int t = 0; t < cfg.n_a; ++t) out[static_cast<std::size_t>(t)] = y_init[static_cast<std::size_t>(t)];
  std::vector<double> regressor(static_cast<std::size_t>(cfg.regressor_size()));
  for (int t = cfg.n_a; t < n; ++t) {
    for (int m = 0; m <= cfg.n_b; ++m)
      regressor[static_cast<std::size_t>(m)] = (t - m >= 0) ? u[static_cast<std::size_t>(t - m)] : 0.0;
    for (int l = 1; l <= cfg.n_a; ++l)
      regressor[static_cast<std::size_t>(cfg.n_b + l)] = out[static_cast<std::size_t>(t - l)];
    out[static_cast<std::size_t>(t)] = model::forward(cfg, params, regressor);
  }
  return out;
}

std::vector<double> input_sensitivities(const NarxConfig& cfg, const MlpParams& params,
                                        const SimBuffer& buf, int t_steps) {
  ad::Tape tape;
  tape.reserve(1024 + static_cast<std::size_t>(t_steps) * 8u *
                          static_cast<std::size_t>(cfg.q) *
                          static_cast<std::size_t>(cfg.regressor_size() + 2));
  std::vector<ad::Var> u_vars;
  u_vars.reserve(buf.u_window.size());
  for (double v : buf.u_window) u_vars.push_back(tape.lift(v));
  std::vector<ad::Var> y_vars;
  y_vars.reserve(buf.y_seed.size());
  for (double v : buf.y_seed) y_vars.push_back(tape.lift(v));

  const ad::Var out = simulate_steps_taped(cfg, params, tape, u_vars, y_vars, t_steps);
  const std::vector<double> grad_u = tape.backward(out, u_vars);

  std::vector<double> d(static_cast<std::size_t>(t_steps) + 1, 0.0);
  for (int k = 0; k <= t_steps; ++k) {
    const int j = cfg.n_b + t_steps - 1 - k;  // window index of u(t + T - 1 - k)
    if (j >= 0) d[static_cast<std::size_t>(k)] = grad_u[static_cast<std::size_t>(j)];
  }
  return d;
}

AnchorRange anchor_range(const NarxConfig& cfg, int record_length, int t_steps) {
  AnchorRange r;
  r.first = std::max(cfg.n_a, cfg.n_b);
  r.last = record_length - t_steps + 1;
  if (r.last < r.first) r.last = r.first;
  return r;
}

SimBuffer make_sim_buffer(const NarxConfig& cfg, const Series& data, int anchor, int t_steps) {
  const int n = static_cast<int>(data.u.size());
  if (anchor - cfg.n_a < 0 || anchor - cfg.n_b < 0 || anchor + t_steps - 1 >= n)
    throw UsageError("make_sim_buffer: anchor windows exceed the record");
  SimBuffer buf;
  buf.u_window.assign(data.u.begin() + (anchor - cfg.n_b),
                      data.u.begin() + (anchor + t_steps));
  buf.y_seed.assign(data.y.begin() + (anchor - cfg.n_a), data.y.begin() + anchor);
  return buf;
}

double loss_prediction(const NarxConfig& cfg, const MlpParams& params, const Series& data) {
  cfg.validate();
  const int n = static_cast<int>(data.u.size());
  if (static_cast<int>(data.y.size()) != n) throw UsageError("loss_prediction: u/y length mismatch");
  const int t0 = std::max(cfg.n_a, cfg.n_b);
  if (t0 >= n) throw UsageError("loss_prediction: record too short for the lag orders");
  std::vector<double> regressor(static_cast<std::size_t>(cfg.regressor_size()));
  double acc = 0.0;
  for (int t = t0; t < n; ++t) {
    for (int m = 0; m <= cfg.n_b; ++m)
      regressor[static_cast<std::size_t>(m)] = data.u[static_cast<std::size_t>(t - m)];
    for (int l = 1; l <= cfg.n_a; ++l)
      regressor[static_cast<std::size_t>(cfg.n_b + l)] = data.y[static_cast<std::size_t>(t - l)];
    const double e = data.y[static_cast<std::size_t>(t)] - model::forward(cfg, params, regressor);
    acc += e * e;
  }
  return acc / static_cast<double>(n - t0);
}

double loss_regularized(const NarxConfig& cfg, const MlpParams& params, const Series& data,
                        const RegConfig& reg) {
  reg.validate();
  if (reg.gamma == 0.0) return loss_prediction(cfg, params, data);

  const double mse = loss_prediction(cfg, params, data);
  const AnchorRange range = anchor_range(cfg, static_cast<int>(data.u.size()), reg.t_steps);
  const int n_anchors = range.count(reg.anchor_stride);
  if (n_anchors == 0) throw UsageError("loss_regularized: no feasible anchor");

  std::vector<double> sum_sq(static_cast<std::size_t>(reg.t_steps) + 1, 0.0);
  for (int t = range.first; t < range.last; t += reg.anchor_stride) {
    const SimBuffer buf = make_sim_buffer(cfg, data, t, reg.t_steps);
    const std::vector<double> d = input_sensitivities(cfg, params, buf, reg.t_steps);
    for (int k = 0; k <= reg.t_steps; ++k)
      sum_sq[static_cast<std::size_t>(k)] += d[static_cast<std::size_t>(k)] * d[static_cast<std::size_t>(k)];
  }
  double penalty = 0.0;
  for (int k = 0; k <= reg.t_steps; ++k)
    penalty += std::pow(reg.alpha, -k) * sum_sq[static_cast<std::size_t>(k)] /
               static_cast<double>(n_anchors);
  return mse + reg.gamma * penalty;
}

double loss_simulation(const NarxConfig& cfg, const MlpParams& params, const Series& data) {
  cfg.validate();
  const int n = static_cast<int>(data.u.size());
  if (static_cast<int>(data.y.size()) != n) throw UsageError("loss_simulation: u/y length mismatch");
  const std::vector<double> yhat =
      simulate_free_run(cfg, params, data.u, data.y.subspan(0, static_cast<std::size_t>(cfg.n_a)));
  if (cfg.n_a >= n) throw UsageError("loss_simulation: record too short");
  double acc = 0.0;
  for (int t = cfg.n_a; t < n; ++t) {
    const double e = data.y[static_cast<std::size_t>(t)] - yhat[static_cast<std::size_t>(t)];
    acc += e * e;
  }
  return acc / static_cast<double>(n - cfg.n_a);
}

}  // namespace narxid::narx

// SPDX-License-Identifier: Apache-2.0
#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace narxid::metrics {

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLti: return "lti";
    case ModelKind::kEs: return "es";
    case ModelKind::kDr: return "dr";
    case ModelKind::kNoe: return "noe";
  }
  return "unknown";
}

std::string order_case_name(OrderCase c) { return c == OrderCase::kHmo ? "hmo" : "omo"; }

std::string eval_mode_name(EvalMode mode) {
  return mode == EvalMode::kOneStep ? "one_step" : "simulation";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "lti") return ModelKind::kLti;
  if (name == "es") return ModelKind::kEs;
  if (name == "dr") return ModelKind::kDr;
  if (name == "noe") return ModelKind::kNoe;
  throw DataError("unknown model kind: " + name);
}

OrderCase order_case_from_name(const std::string& name) {
  if (name == "hmo") return OrderCase::kHmo;
  if (name == "omo") return OrderCase::kOmo;
  throw DataError("unknown order case: " + name);
}

double nrmse(std::span<const double> y, std::span<const double> y_hat, NrmseDenominator denom) {
  const std::size_t n = y.size();
  if (n == 0 || y_hat.size() != n) throw UsageError("nrmse: sequences must be equal, non-empty");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (y[i] - mean) * (y[i] - mean);
    const double e = y[i] - y_hat[i];
    sq += e * e;
  }
  var /= static_cast<double>(n);
  if (var <= 0.0) throw NumericError("nrmse: zero-variance reference sequence");
  const double rmse = std::sqrt(sq / static_cast<double>(n));
  return denom == NrmseDenominator::kStdDev ? rmse / std::sqrt(var) : rmse / var;
}

std::vector<double> decay_profile(const narx::NarxConfig& cfg, const narx::MlpParams& params,
                                  const narx::Series& data, int t_steps) {
  const narx::AnchorRange range = narx::anchor_range(cfg, static_cast<int>(data.u.size()), t_steps);
  if (range.count(1) == 0) throw UsageError("decay_profile: no feasible anchor");
  std::vector<double> profile(static_cast<std::size_t>(t_steps) + 1, 0.0);
  int count = 0;
  for (int t = range.first; t < range.last; ++t) {
    const narx::SimBuffer buf = narx::make_sim_buffer(cfg, data, t, t_steps);
    const std::vector<double> d = narx::input_sensitivities(cfg, params, buf, t_steps);
    for (std::size_t k = 0; k < profile.size(); ++k) profile[k] += std::fabs(d[k]);
    ++count;
  }
  for (double& v : profile) v /= static_cast<double>(count);
  return profile;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::string group_key(ModelKind kind, OrderCase c, const std::string& role, EvalMode mode) {
  return order_case_name(c) + "/" + role + "/" + eval_mode_name(mode) + "/" +
         model_kind_name(kind);
}

std::map<std::string, GroupSummary> summarize(const std::vector<MetricRecord>& records) {
  if (records.empty()) throw UsageError("summarize: no records");
  std::map<std::string, std::vector<double>> groups;
  for (const MetricRecord& r : records)
    groups[group_key(r.model_kind, r.order_case, r.dataset_role, r.mode)].push_back(r.nrmse);
  std::map<std::string, GroupSummary> out;
  for (auto& [key, values] : groups) {
    GroupSummary s;
    s.count = static_cast<int>(values.size());
    s.median = quantile(values, 0.5);
    s.q1 = quantile(values, 0.25);
    s.q3 = quantile(values, 0.75);
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    out[key] = s;
  }
  return out;
}

}  // namespace narxid::metrics

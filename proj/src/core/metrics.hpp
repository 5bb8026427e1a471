// SPDX-License-Identifier: Apache-2.0
//
// Evaluation: normalized RMS error, sensitivity decay profiles, and
// median/quantile summaries of Monte-Carlo metric records.

#ifndef NARXID_CORE_METRICS_HPP
#define NARXID_CORE_METRICS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/narx.hpp"

namespace narxid::metrics {

enum class ModelKind { kLti, kEs, kDr, kNoe };
enum class OrderCase { kHmo, kOmo };
enum class EvalMode { kOneStep, kSimulation };

std::string model_kind_name(ModelKind kind);
std::string order_case_name(OrderCase c);
std::string eval_mode_name(EvalMode mode);
ModelKind model_kind_from_name(const std::string& name);
OrderCase order_case_from_name(const std::string& name);

struct MetricRecord {
  ModelKind model_kind = ModelKind::kEs;
  OrderCase order_case = OrderCase::kHmo;
  std::string dataset_role;  // train | white_test | colored_test
  EvalMode mode = EvalMode::kSimulation;
  int run = 0;
  double nrmse = 0.0;
};

// Denominator convention for the normalized error.
enum class NrmseDenominator {
  kStdDev,    // RMSE / std(y); constant-mean predictor scores 1
  kVariance,  // RMSE / var(y)
};

double nrmse(std::span<const double> y, std::span<const double> y_hat,
             NrmseDenominator denom = NrmseDenominator::kStdDev);

// Mean over all feasible anchors of |d_k|, k = 0..T, where d are the input
// sensitivities of the depth-T closed-loop simulation.
std::vector<double> decay_profile(const narx::NarxConfig& cfg, const narx::MlpParams& params,
                                  const narx::Series& data, int t_steps);

struct GroupSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  int count = 0;
};

// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

// Group key: (model kind, order case, dataset role, mode), rendered as
// "case/role/mode/kind" for stable ordering.
std::map<std::string, GroupSummary> summarize(const std::vector<MetricRecord>& records);

std::string group_key(ModelKind kind, OrderCase c, const std::string& role, EvalMode mode);

}  // namespace narxid::metrics

#endif  // NARXID_CORE_METRICS_HPP

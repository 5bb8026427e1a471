// SPDX-License-Identifier: Apache-2.0
//
// Linear FIR estimation: regressor construction, ordinary least squares, and
// kernel-regularized least squares with DC/TC priors.

#ifndef NARXID_CORE_FIR_HPP
#define NARXID_CORE_FIR_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "core/common.hpp"

namespace narxid::fir {

// Impulse-response coefficients g_0..g_{n_b}.
struct FirModel {
  std::vector<double> g;
  int order() const { return static_cast<int>(g.size()) - 1; }
};

enum class KernelKind { kDiagonalCorrelated, kTunedCorrelated };

// Prior covariance parameters. 0-based exponents:
//   TC: P[i,j] = c * lambda^max(i,j)
//   DC: P[i,j] = c * lambda^((i+j)/2) * rho^|i-j|
struct KernelConfig {
  KernelKind kind = KernelKind::kTunedCorrelated;
  double c = 1.0;         // scale > 0
  double lambda = 0.9;    // decay in (0,1)
  double rho = 0.9;       // correlation in [-1,1], DC only
  double sigma2 = 1.0;    // noise variance > 0

  void validate() const {
    if (!(c > 0.0)) throw UsageError("KernelConfig: c must be > 0");
    if (!(lambda > 0.0 && lambda < 1.0)) throw UsageError("KernelConfig: lambda must be in (0,1)");
    if (!(rho >= -1.0 && rho <= 1.0)) throw UsageError("KernelConfig: rho must be in [-1,1]");
    if (!(sigma2 > 0.0)) throw UsageError("KernelConfig: sigma2 must be > 0");
  }
};

// N x (n_b+1) matrix with row t = [u(t), u(t-1), ..., u(t-n_b)]; samples
// before the record start are zero.
Eigen::MatrixXd build_regressor(std::span<const double> u, int n_b);

// Ordinary least squares via Cholesky on the normal equations, with a
// column-pivoted QR fallback; rank-deficient systems are rejected.
FirModel fit_least_squares(std::span<const double> u, std::span<const double> y, int n_b);

// Prior covariance P for the given size (n coefficients).
Eigen::MatrixXd build_prior(const KernelConfig& cfg, int n);

// Regularization matrix R = sigma2 * P^{-1}; throws NumericError if P is not
// positive definite.
Eigen::MatrixXd build_kernel(const KernelConfig& cfg, int n);

// theta = (X^T X + R)^{-1} X^T y.
FirModel fit_regularized(std::span<const double> u, std::span<const double> y, int n_b,
                         const Eigen::MatrixXd& r);

// yhat(t) = sum_k g_k u(t-k), zero initial conditions.
std::vector<double> predict(const FirModel& model, std::span<const double> u);

}  // namespace narxid::fir

#endif  // NARXID_CORE_FIR_HPP

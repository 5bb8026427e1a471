// SPDX-License-Identifier: Apache-2.0
#include "core/fir.hpp"

#include <cmath>

namespace narxid::fir {

Eigen::MatrixXd build_regressor(std::span<const double> u, int n_b) {
  if (n_b < 0) throw UsageError("build_regressor: n_b must be >= 0");
  const auto n = static_cast<Eigen::Index>(u.size());
  if (n < 1) throw UsageError("build_regressor: empty input");
  Eigen::MatrixXd x(n, n_b + 1);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int k = 0; k <= n_b; ++k)
      x(t, k) = (t - k >= 0) ? u[static_cast<std::size_t>(t - k)] : 0.0;
  return x;
}

namespace {

FirModel solve_normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd* r) {
  Eigen::MatrixXd m = x.transpose() * x;
  if (r) m += *r;
  const Eigen::VectorXd rhs = x.transpose() * y;

  Eigen::VectorXd theta;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    theta = llt.solve(rhs);
  } else if (!r || r->isZero(0.0)) {
    // QR on X itself; reject rank-deficient problems.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols())
      throw NumericError("FIR fit: rank-deficient normal equations");
    theta = qr.solve(y);
  } else {
    // Stacked QR: minimize ||[X; L^T] theta - [y; 0]|| with R = L L^T.
    Eigen::LLT<Eigen::MatrixXd> rllt(*r);
    if (rllt.info() != Eigen::Success)
      throw NumericError("FIR fit: indefinite regularized system");
    Eigen::MatrixXd stacked(x.rows() + x.cols(), x.cols());
    stacked.topRows(x.rows()) = x;
    stacked.bottomRows(x.cols()) = rllt.matrixL().transpose();
    Eigen::VectorXd yext = Eigen::VectorXd::Zero(stacked.rows());
    yext.head(x.rows()) = y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
    if (qr.rank() < x.cols())
      throw NumericError("FIR fit: rank-deficient regularized system");
    theta = qr.solve(yext);
  }

  FirModel model;
  model.g.assign(theta.data(), theta.data() + theta.size());
  return model;
}

}  // namespace

FirModel fit_least_squares(std::span<const double> u, std::span<const double> y, int n_b) {
  const auto n = static_cast<Eigen::Index>(u.size());
  if (static_cast<Eigen::Index>(y.size()) != n)
    throw UsageError("fit_least_squares: u/y length mismatch");
  if (n <= n_b + 1) throw UsageError("fit_least_squares: need more samples than coefficients");
  const Eigen::MatrixXd x = build_regressor(u, n_b);
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  return solve_normal_equations(x, yv, nullptr);
}

Eigen::MatrixXd build_prior(const KernelConfig& cfg, int n) {
  cfg.validate();
  if (n < 1) throw UsageError("build_prior: size must be >= 1");
  Eigen::MatrixXd p(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (cfg.kind == KernelKind::kTunedCorrelated) {
        p(i, j) = cfg.c * std::pow(cfg.lambda, std::max(i, j));
      } else {
        p(i, j) = cfg.c * std::pow(cfg.lambda, 0.5 * (i + j)) * std::pow(cfg.rho, std::abs(i - j));
      }
    }
  }
  return p;
}

Eigen::MatrixXd build_kernel(const KernelConfig& cfg, int n) {
  const Eigen::MatrixXd p = build_prior(cfg, n);
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success)
    throw NumericError("build_kernel: prior covariance is not positive definite");
  Eigen::MatrixXd r = cfg.sigma2 * llt.solve(Eigen::MatrixXd::Identity(n, n));
  // Symmetrize against factorization roundoff.
  r = 0.5 * (r + r.transpose()).eval();
  return r;
}

FirModel fit_regularized(std::span<const double> u, std::span<const double> y, int n_b,
                         const Eigen::MatrixXd& r) {
  const auto n = static_cast<Eigen::Index>(u.size());
  if (static_cast<Eigen::Index>(y.size()) != n)
    throw UsageError("fit_regularized: u/y length mismatch");
  if (r.rows() != n_b + 1 || r.cols() != n_b + 1)
    throw UsageError("fit_regularized: regularizer size does not match order");
  const Eigen::MatrixXd x = build_regressor(u, n_b);
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  return solve_normal_equations(x, yv, &r);
}

std::vector<double> predict(const FirModel& model, std::span<const double> u) {
  if (model.g.empty()) throw UsageError("predict: empty FIR model");
  std::vector<double> out(u.size(), 0.0);
  const int n_b = model.order();
  for (std::size_t t = 0; t < u.size(); ++t) {
    double acc = 0.0;
    for (int k = 0; k <= n_b; ++k)
      if (static_cast<int>(t) - k >= 0) acc += model.g[static_cast<std::size_t>(k)] * u[t - static_cast<std::size_t>(k)];
    out[t] = acc;
  }
  return out;
}

}  // namespace narxid::fir

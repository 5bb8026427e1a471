// SPDX-License-Identifier: Apache-2.0
#include "core/narx_grad.hpp"

#include <algorithm>
#include <cmath>

namespace narxid::narx {

namespace {

Eigen::VectorXd pack_grad(const Eigen::MatrixXd& gwu, const Eigen::MatrixXd& gwy,
                          const Eigen::VectorXd& gb1, const Eigen::VectorXd& gw2, double gb2) {
  MlpParams g;
  g.w_in_u = gwu;
  g.w_in_y = gwy;
  g.b_hidden = gb1;
  g.w_out = gw2;
  g.b_out = gb2;
  return g.to_flat();
}

}  // namespace

// ---------------------------------------------------------------------------
// PredictionContext
// ---------------------------------------------------------------------------

PredictionContext::PredictionContext(const NarxConfig& cfg, const Series& data) : cfg_(cfg) {
  cfg_.validate();
  const int n = static_cast<int>(data.u.size());
  if (static_cast<int>(data.y.size()) != n)
    throw UsageError("PredictionContext: u/y length mismatch");
  const int t0 = std::max(cfg.n_a, cfg.n_b);
  const int m = n - t0;
  if (m <= 0) throw UsageError("PredictionContext: record too short for the lag orders");
  ru_.resize(m, cfg.n_b + 1);
  ry_.resize(m, cfg.n_a);
  y_.resize(m);
  for (int r = 0; r < m; ++r) {
    const int t = t0 + r;
    for (int c = 0; c <= cfg.n_b; ++c) ru_(r, c) = data.u[static_cast<std::size_t>(t - c)];
    for (int l = 1; l <= cfg.n_a; ++l) ry_(r, l - 1) = data.y[static_cast<std::size_t>(t - l)];
    y_(r) = data.y[static_cast<std::size_t>(t)];
  }
}

void PredictionContext::forward(const MlpParams& params) {
  x_.noalias() = ru_ * params.w_in_u.transpose();
  if (cfg_.n_a > 0) x_.noalias() += ry_ * params.w_in_y.transpose();
  x_.rowwise() += params.b_hidden.transpose();
  if (cfg_.activation == model::Activation::kTanh) x_ = x_.array().tanh();
  e_.noalias() = x_ * params.w_out;
  e_.array() += params.b_out;
  e_ -= y_;
}

double PredictionContext::loss(const MlpParams& params) {
  forward(params);
  return e_.squaredNorm() / static_cast<double>(e_.size());
}

Eigen::VectorXd PredictionContext::predictions(const MlpParams& params) {
  forward(params);
  return y_ + e_;
}

LossGrad PredictionContext::loss_grad(const MlpParams& params) {
  forward(params);
  const auto m = static_cast<double>(e_.size());
  LossGrad out;
  out.value = e_.squaredNorm() / m;

  const Eigen::VectorXd dyhat = (2.0 / m) * e_;
  const Eigen::VectorXd gw2 = x_.transpose() * dyhat;
  const double gb2 = dyhat.sum();
  h_.noalias() = dyhat * params.w_out.transpose();
  if (cfg_.activation == model::Activation::kTanh)
    h_.array() *= 1.0 - x_.array().square();
  Eigen::MatrixXd gwu(cfg_.q, cfg_.n_b + 1);
  gwu.noalias() = h_.transpose() * ru_;
  Eigen::MatrixXd gwy(cfg_.q, cfg_.n_a);
  gwy.noalias() = h_.transpose() * ry_;
  const Eigen::VectorXd gb1 = h_.colwise().sum().transpose();
  out.grad = pack_grad(gwu, gwy, gb1, gw2, gb2);
  return out;
}

// ---------------------------------------------------------------------------
// SimulationContext
// ---------------------------------------------------------------------------

SimulationContext::SimulationContext(const NarxConfig& cfg, const Series& data) : cfg_(cfg) {
  cfg_.validate();
  const int n = static_cast<int>(data.u.size());
  if (static_cast<int>(data.y.size()) != n)
    throw UsageError("SimulationContext: u/y length mismatch");
  if (n <= cfg.n_b) throw UsageError("SimulationContext: record shorter than input lags");
  const int m = n - cfg.n_a;
  if (m <= 0) throw UsageError("SimulationContext: record shorter than output lags");
  ru_.resize(m, cfg.n_b + 1);
  y_.resize(m);
  y_seed_.resize(cfg.n_a);
  for (int t = 0; t < cfg.n_a; ++t) y_seed_(t) = data.y[static_cast<std::size_t>(t)];
  for (int r = 0; r < m; ++r) {
    const int t = cfg.n_a + r;
    for (int c = 0; c <= cfg.n_b; ++c)
      ru_(r, c) = (t - c >= 0) ? data.u[static_cast<std::size_t>(t - c)] : 0.0;
    y_(r) = data.y[static_cast<std::size_t>(t)];
  }
}

void SimulationContext::forward(const MlpParams& params) {
  const auto m = ru_.rows();
  x_.noalias() = ru_ * params.w_in_u.transpose();
  ryhat_.resize(m, cfg_.n_a);
  e_.resize(m);
  // Delayed-output ring: previous n_a outputs in ascending time order.
  Eigen::VectorXd recent = y_seed_;
  Eigen::RowVectorXd zrow(cfg_.q);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (int l = 1; l <= cfg_.n_a; ++l) ryhat_(r, l - 1) = recent(cfg_.n_a - l);
    zrow = x_.row(r) + params.b_hidden.transpose();
    if (cfg_.n_a > 0) zrow.noalias() += ryhat_.row(r) * params.w_in_y.transpose();
    if (cfg_.activation == model::Activation::kTanh)
      x_.row(r) = zrow.array().tanh();
    else
      x_.row(r) = zrow;
    const double yhat = x_.row(r).dot(params.w_out) + params.b_out;
    e_(r) = yhat - y_(r);
    if (cfg_.n_a > 0) {
      for (int l = 0; l + 1 < cfg_.n_a; ++l) recent(l) = recent(l + 1);
      recent(cfg_.n_a - 1) = yhat;
    }
  }
}

double SimulationContext::loss(const MlpParams& params) {
  forward(params);
  return e_.squaredNorm() / static_cast<double>(e_.size());
}

LossGrad SimulationContext::loss_grad(const MlpParams& params) {
  forward(params);
  const auto m = ru_.rows();
  const double mm = static_cast<double>(m);
  LossGrad out;
  out.value = e_.squaredNorm() / mm;

  // c = act'(z) ⊙ w_out per row; rmat(r, j-1) = d yhat_r / d (output lag j).
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(m, cfg_.q);
  if (cfg_.activation == model::Activation::kTanh) c.array() -= x_.array().square();
  c.array().rowwise() *= params.w_out.transpose().array();
  Eigen::MatrixXd rmat;
  if (cfg_.n_a > 0) rmat.noalias() = c * params.w_in_y;

  // Total adjoint of each prediction, swept backwards through the recursion.
  Eigen::VectorXd lambda(m);
  for (Eigen::Index r = m - 1; r >= 0; --r) {
    double acc = (2.0 / mm) * e_(r);
    const int jmax = std::min<Eigen::Index>(cfg_.n_a, m - 1 - r);
    for (int j = 1; j <= jmax; ++j) acc += lambda(r + j) * rmat(r + j, j - 1);
    lambda(r) = acc;
  }

  Eigen::MatrixXd h = lambda.asDiagonal() * c;
  Eigen::MatrixXd gwu(cfg_.q, cfg_.n_b + 1);
  gwu.noalias() = h.transpose() * ru_;
  Eigen::MatrixXd gwy(cfg_.q, cfg_.n_a);
  gwy.noalias() = h.transpose() * ryhat_;
  const Eigen::VectorXd gb1 = h.colwise().sum().transpose();
  const Eigen::VectorXd gw2 = x_.transpose() * lambda;
  const double gb2 = lambda.sum();
  out.grad = pack_grad(gwu, gwy, gb1, gw2, gb2);
  return out;
}

// ---------------------------------------------------------------------------
// RegularizedContext
// ---------------------------------------------------------------------------

RegularizedContext::RegularizedContext(const NarxConfig& cfg, const Series& data, int t_steps,
                                       int anchor_stride)
    : cfg_(cfg), t_steps_(t_steps), pred_(cfg, data) {
  if (t_steps < 1) throw UsageError("RegularizedContext: t_steps must be >= 1");
  if (anchor_stride < 1) throw UsageError("RegularizedContext: anchor_stride must be >= 1");
  const int n = static_cast<int>(data.u.size());
  const AnchorRange range = anchor_range(cfg, n, t_steps);
  n_anchors_ = range.count(anchor_stride);
  if (n_anchors_ == 0) throw UsageError("RegularizedContext: no feasible anchor");

  const int a = n_anchors_;
  const int nu = cfg.n_b + 1;
  const int t = t_steps;
  ul_big_.resize(static_cast<Eigen::Index>(t) * a, nu);
  ym_.resize(a, cfg.n_a);
  yl_big_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t) * a, cfg.n_a);
  yld_big_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t) * a, cfg.n_a);

  int row = 0;
  std::vector<int> anchors;
  for (int at = range.first; at < range.last; at += anchor_stride) anchors.push_back(at);
  for (int i = 0; i < t; ++i) {
    for (int ai = 0; ai < a; ++ai, ++row) {
      const int time = anchors[static_cast<std::size_t>(ai)] + i;
      for (int m = 0; m <= cfg.n_b; ++m)
        ul_big_(row, m) = data.u[static_cast<std::size_t>(time - m)];
    }
  }
  for (int ai = 0; ai < a; ++ai)
    for (int s = 0; s < cfg.n_a; ++s)
      ym_(ai, s) = data.y[static_cast<std::size_t>(anchors[static_cast<std::size_t>(ai)] - cfg.n_a + s)];
  // Measured lag columns are constant over epochs; predicted columns get
  // overwritten every evaluation.
  for (int i = 0; i < t; ++i)
    for (int j = i + 1; j <= cfg.n_a; ++j)
      yl_big_.middleRows(static_cast<Eigen::Index>(i) * a, a).col(j - 1) = ym_.col(cfg.n_a + i - j);

  x_big_.resize(static_cast<Eigen::Index>(t) * a, cfg.q);
  b_big_.resize(static_cast<Eigen::Index>(t) * a, cfg.n_a);
  yhat_.resize(a, t);
  mu_.resize(a, t);
  d_.resize(a, t + 1);
}

void RegularizedContext::forward_and_sensitivities(const MlpParams& params) {
  const int a = n_anchors_;
  const int t = t_steps_;
  const bool is_tanh = cfg_.activation == model::Activation::kTanh;

  x_big_.noalias() = ul_big_ * params.w_in_u.transpose();
  for (int i = 0; i < t; ++i) {
    auto blk = x_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    auto ylblk = yl_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    for (int j = 1; j <= std::min(i, cfg_.n_a); ++j) ylblk.col(j - 1) = yhat_.col(i - j);
    if (cfg_.n_a > 0) blk.noalias() += ylblk * params.w_in_y.transpose();
    blk.rowwise() += params.b_hidden.transpose();
    if (is_tanh) blk = blk.array().tanh();
    yhat_.col(i).noalias() = blk * params.w_out;
    yhat_.col(i).array() += params.b_out;
  }

  // c = act'(z) ⊙ w_out; b(:, j-1) = d yhat / d (output lag j).
  // act'(z) is recovered from the stored activations (1 - x^2 for tanh).
  Eigen::MatrixXd& c_big = zd_big_;  // reused as scratch until the tangent pass
  c_big.resize(static_cast<Eigen::Index>(t) * a, cfg_.q);
  if (is_tanh)
    c_big.array() = 1.0 - x_big_.array().square();
  else
    c_big.setOnes();
  c_big.array().rowwise() *= params.w_out.transpose().array();
  if (cfg_.n_a > 0) b_big_.noalias() = c_big * params.w_in_y;

  mu_.col(t - 1).setOnes();
  for (int i = t - 2; i >= 0; --i) {
    mu_.col(i).setZero();
    const int jmax = std::min(cfg_.n_a, t - 1 - i);
    for (int j = 1; j <= jmax; ++j)
      mu_.col(i).array() +=
          mu_.col(i + j).array() *
          b_big_.middleRows(static_cast<Eigen::Index>(i + j) * a, a).col(j - 1).array();
  }

  d_.setZero();
  Eigen::MatrixXd scaled(a, cfg_.q);
  Eigen::MatrixXd g(a, cfg_.n_b + 1);
  for (int i = 0; i < t; ++i) {
    scaled = c_big.middleRows(static_cast<Eigen::Index>(i) * a, a);
    scaled.array().colwise() *= mu_.col(i).array();
    g.noalias() = scaled * params.w_in_u;
    for (int m = 0; m <= cfg_.n_b; ++m) {
      const int k = t - 1 - i + m;
      if (k >= 0 && k <= t) d_.col(k) += g.col(m);
    }
  }
}

double RegularizedContext::loss(const MlpParams& params, double alpha, double gamma) {
  if (gamma == 0.0) return pred_.loss(params);
  const double mse = pred_.loss(params);
  forward_and_sensitivities(params);
  double penalty = 0.0;
  for (int k = 0; k <= t_steps_; ++k)
    penalty += std::pow(alpha, -k) * d_.col(k).squaredNorm() / static_cast<double>(n_anchors_);
  return mse + gamma * penalty;
}

Eigen::VectorXd RegularizedContext::mean_abs_sensitivities(const MlpParams& params) {
  forward_and_sensitivities(params);
  return d_.cwiseAbs().colwise().sum().transpose() / static_cast<double>(n_anchors_);
}

LossGrad RegularizedContext::loss_grad(const MlpParams& params, double alpha, double gamma) {
  if (gamma == 0.0) return pred_.loss_grad(params);

  LossGrad out = pred_.loss_grad(params);
  forward_and_sensitivities(params);

  const int a = n_anchors_;
  const int t = t_steps_;
  const int nu = cfg_.n_b + 1;
  const bool is_tanh = cfg_.activation == model::Activation::kTanh;

  // Penalty value and the detached direction v = dP/dd.
  Eigen::VectorXd weights(t + 1);
  for (int k = 0; k <= t; ++k) weights(k) = gamma * std::pow(alpha, -k);
  double penalty = 0.0;
  Eigen::MatrixXd v(a, t + 1);
  for (int k = 0; k <= t; ++k) {
    penalty += weights(k) * d_.col(k).squaredNorm() / static_cast<double>(a);
    v.col(k) = (2.0 * weights(k) / static_cast<double>(a)) * d_.col(k);
  }
  out.value += penalty;

  // Tangent pass: perturb the input windows along v, propagate through the
  // simulation. zd/xd are the tangents of z/x; ydot of the predictions.
  vl_big_.setZero(static_cast<Eigen::Index>(t) * a, nu);
  for (int i = 0; i < t; ++i) {
    auto vlblk = vl_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    for (int m = 0; m <= cfg_.n_b; ++m) {
      const int k = t - 1 - i + m;
      if (k >= 0 && k <= t) vlblk.col(m) = v.col(k);
    }
  }
  // zd_big_ was used as c scratch; recompute it as the true tangent now.
  Eigen::MatrixXd ydot(a, t);
  zd_big_.noalias() = vl_big_ * params.w_in_u.transpose();
  xd_big_.resize(static_cast<Eigen::Index>(t) * a, cfg_.q);
  for (int i = 0; i < t; ++i) {
    auto zdblk = zd_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    auto yldblk = yld_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    for (int j = 1; j <= std::min(i, cfg_.n_a); ++j) yldblk.col(j - 1) = ydot.col(i - j);
    if (cfg_.n_a > 0) zdblk.noalias() += yldblk * params.w_in_y.transpose();
    auto xdblk = xd_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    if (is_tanh)
      xdblk.array() = (1.0 - x_big_.middleRows(static_cast<Eigen::Index>(i) * a, a).array().square()) *
                      zdblk.array();
    else
      xdblk = zdblk;
    ydot.col(i).noalias() = xdblk * params.w_out;
  }

  // Reverse sweep over primal + tangent, accumulating parameter adjoints.
  Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(a, t);
  Eigen::MatrixXd adot = Eigen::MatrixXd::Zero(a, t);
  adot.col(t - 1).setOnes();

  Eigen::MatrixXd gwu = Eigen::MatrixXd::Zero(cfg_.q, nu);
  Eigen::MatrixXd gwy = Eigen::MatrixXd::Zero(cfg_.q, cfg_.n_a);
  Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(cfg_.q);
  Eigen::VectorXd gw2 = Eigen::VectorXd::Zero(cfg_.q);
  double gb2 = 0.0;

  Eigen::MatrixXd bar_xdot(a, cfg_.q), bar_k(a, cfg_.q), bar_zd(a, cfg_.q), bar_z(a, cfg_.q);
  Eigen::MatrixXd k_blk(a, cfg_.q), py(a, cfg_.n_a), pyd(a, cfg_.n_a);

  for (int i = t - 1; i >= 0; --i) {
    const auto xblk = x_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    const auto xdblk = xd_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    const auto zdblk = zd_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    const auto ylblk = yl_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    const auto yldblk = yld_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    const auto ulblk = ul_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);
    const auto vlblk = vl_big_.middleRows(static_cast<Eigen::Index>(i) * a, a);

    if (is_tanh)
      k_blk.array() = 1.0 - xblk.array().square();
    else
      k_blk.setOnes();

    // Output layer, tangent and primal.
    gw2.noalias() += xdblk.transpose() * adot.col(i);
    gw2.noalias() += xblk.transpose() * abar.col(i);
    gb2 += abar.col(i).sum();

    bar_xdot.noalias() = adot.col(i) * params.w_out.transpose();
    bar_k.array() = bar_xdot.array() * zdblk.array();
    bar_zd.array() = bar_xdot.array() * k_blk.array();

    bar_z.noalias() = abar.col(i) * params.w_out.transpose();
    if (is_tanh) {
      // d act'(z)/dz = -2 x (1 - x^2); fold the bar_k route into bar_z.
      bar_z.array() = (bar_z.array() - 2.0 * bar_k.array() * xblk.array()) * k_blk.array();
    }

    gwu.noalias() += bar_z.transpose() * ulblk;
    gwu.noalias() += bar_zd.transpose() * vlblk;
    if (cfg_.n_a > 0) {
      gwy.noalias() += bar_z.transpose() * ylblk;
      gwy.noalias() += bar_zd.transpose() * yldblk;
    }
    gb1.noalias() += bar_z.colwise().sum().transpose();

    if (cfg_.n_a > 0 && i > 0) {
      py.noalias() = bar_z * params.w_in_y;
      pyd.noalias() = bar_zd * params.w_in_y;
      for (int j = 1; j <= std::min(i, cfg_.n_a); ++j) {
        abar.col(i - j) += py.col(j - 1);
        adot.col(i - j) += pyd.col(j - 1);
      }
    }
  }

  out.grad += pack_grad(gwu, gwy, gb1, gw2, gb2);
  return out;
}

}  // namespace narxid::narx

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/training.hpp"
#include "test_util.hpp"

using namespace narxid;
using model::Activation;
using model::MlpParams;
using model::NarxConfig;
using training::AdamState;
using training::EsCriterion;
using training::LossKind;
using training::TrainSpec;

namespace {

std::vector<double> random_signal(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> s(static_cast<std::size_t>(n));
  for (double& v : s) v = rng.uniform(-1.0, 1.0);
  return s;
}

struct TeacherSetup {
  NarxConfig cfg;
  MlpParams teacher;
  std::vector<double> u_train, y_train, u_val, y_val;
};

TeacherSetup make_teacher_setup(std::uint64_t seed, double noise_sd = 0.0) {
  TeacherSetup ts;
  ts.cfg = {1, 1, 2, Activation::kTanh};
  ts.teacher = model::init_params(ts.cfg, seed);
  // A useful teacher needs nonzero output weights of decent size.
  ts.teacher.w_out *= 3.0;
  ts.u_train = random_signal(200, seed ^ 2);
  ts.u_val = random_signal(80, seed ^ 3);
  const std::vector<double> init(1, 0.0);
  ts.y_train = narx::simulate_free_run(ts.cfg, ts.teacher, ts.u_train, init);
  ts.y_val = narx::simulate_free_run(ts.cfg, ts.teacher, ts.u_val, init);
  if (noise_sd > 0.0) {
    Rng noise(seed ^ 4);
    for (double& v : ts.y_train) v += noise_sd * noise.gaussian();
  }
  return ts;
}

TrainSpec basic_spec(int epochs, int patience, int record) {
  TrainSpec spec;
  spec.loss = LossKind::kPrediction;
  spec.max_epochs = epochs;
  spec.patience = patience;
  spec.batch_size = record;
  spec.criterion = EsCriterion::kPredictionVal;
  return spec;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  AdamState st(4);
  Eigen::VectorXd p(4);
  p << 1.0, -2.0, 0.5, 3.0;
  const Eigen::VectorXd before = p;
  for (int i = 0; i < 10; ++i) training::adam_step(st, p, Eigen::VectorXd::Zero(4));
  CHECK(p == before);
}

TEST_CASE("adam: first step moves by about the learning rate") {
  AdamState st(2);
  Eigen::VectorXd p(2);
  p << 0.0, 0.0;
  Eigen::VectorXd g(2);
  g << 0.5, -2.0;
  training::adam_step(st, p, g);
  // After bias correction the first update is lr * g / (|g| + eps).
  CHECK(std::fabs(p(0) + 1e-3) < 1e-9);
  CHECK(std::fabs(p(1) - 1e-3) < 1e-9);
}

TEST_CASE("adam: minimizes a quadratic from x = 1") {
  AdamState st(1);
  Eigen::VectorXd x(1);
  x << 1.0;
  int steps_to_tol = -1;
  for (int i = 1; i <= 4000; ++i) {
    Eigen::VectorXd g(1);
    g << 2.0 * x(0);
    training::adam_step(st, x, g);
    if (steps_to_tol < 0 && std::fabs(x(0)) < 1e-3) steps_to_tol = i;
    if (i == 2000) CHECK(std::fabs(x(0)) < 0.05);
  }
  // The PyTorch-default settings cross |x| < 1e-3 shortly after step 2000
  // (measured ~2400) and then converge hard.
  CHECK(steps_to_tol > 0);
  CHECK(steps_to_tol < 3000);
  CHECK(std::fabs(x(0)) < 1e-6);
}

TEST_CASE("adam rejects non-finite gradients") {
  AdamState st(1);
  Eigen::VectorXd p(1);
  p << 0.0;
  Eigen::VectorXd g(1);
  g << std::nan("");
  CHECK_THROWS_AS(training::adam_step(st, p, g), NumericError);
}

TEST_CASE("spec validation enforces the invariants") {
  TrainSpec spec = basic_spec(100, 0, 50);
  CHECK_THROWS_AS(spec.validate(50), UsageError);  // patience < 1
  spec.patience = 200;
  CHECK_THROWS_AS(spec.validate(50), UsageError);  // patience > max_epochs
  spec.patience = 10;
  spec.batch_size = 10;
  CHECK_THROWS_AS(spec.validate(50), UsageError);  // smaller than the record
  spec.batch_size = 50;
  CHECK_NOTHROW(spec.validate(50));
  spec.reg = narx::RegConfig{0.7, 0.1, 5, 1};
  CHECK_THROWS_AS(spec.validate(50), UsageError);  // reg without the DR loss
  spec.loss = LossKind::kDerivativeRegularized;
  CHECK_NOTHROW(spec.validate(50));
  spec.reg.reset();
  CHECK_THROWS_AS(spec.validate(50), UsageError);  // DR loss without reg
}

TEST_CASE("teacher-student training reaches a tiny validation error") {
  const TeacherSetup ts = make_teacher_setup(5);
  const MlpParams init = model::init_params(ts.cfg, 999);
  TrainSpec spec = basic_spec(10000, 10000, 200);
  const training::TrainReport report = training::train(
      ts.cfg, init, {ts.u_train, ts.y_train}, {ts.u_val, ts.y_val}, spec);
  CHECK(report.best_val < 1e-4);
}

TEST_CASE("early stopping returns the best-so-far snapshot") {
  const TeacherSetup ts = make_teacher_setup(6, 0.05);
  const MlpParams init = model::init_params(ts.cfg, 1000);
  TrainSpec spec = basic_spec(400, 50, 200);
  const training::TrainReport report = training::train(
      ts.cfg, init, {ts.u_train, ts.y_train}, {ts.u_val, ts.y_val}, spec);

  double min_val = report.trace.front()[1];
  for (const auto& row : report.trace) min_val = std::min(min_val, row[1]);
  CHECK(report.best_val == min_val);
  CHECK(report.epochs_run + 1 == static_cast<int>(report.trace.size()));

  // The snapshot really is the parameters that scored best_val.
  narx::PredictionContext val_ctx(ts.cfg, {ts.u_val, ts.y_val});
  CHECK(val_ctx.loss(report.best_params) == report.best_val);
}

TEST_CASE("regularized training with gamma = 0 reproduces the plain trace") {
  const TeacherSetup ts = make_teacher_setup(7, 0.02);
  const MlpParams init = model::init_params(ts.cfg, 1001);

  TrainSpec es_spec = basic_spec(60, 60, 200);
  const training::TrainReport es_report = training::train(
      ts.cfg, init, {ts.u_train, ts.y_train}, {ts.u_val, ts.y_val}, es_spec);

  TrainSpec dr_spec = es_spec;
  dr_spec.loss = LossKind::kDerivativeRegularized;
  dr_spec.reg = narx::RegConfig{0.7, 0.0, 5, 1};
  const training::TrainReport dr_report = training::train(
      ts.cfg, init, {ts.u_train, ts.y_train}, {ts.u_val, ts.y_val}, dr_spec);

  REQUIRE(es_report.trace.size() == dr_report.trace.size());
  for (std::size_t i = 0; i < es_report.trace.size(); ++i) {
    CHECK(es_report.trace[i][0] == dr_report.trace[i][0]);
    CHECK(es_report.trace[i][1] == dr_report.trace[i][1]);
  }
  CHECK(es_report.best_params.to_flat() == dr_report.best_params.to_flat());
}

TEST_CASE("non-finite data aborts with the epoch and loss kind named") {
  const TeacherSetup ts = make_teacher_setup(8);
  std::vector<double> y_bad = ts.y_train;
  y_bad[50] = std::nan("");
  const MlpParams init = model::init_params(ts.cfg, 1002);
  TrainSpec spec = basic_spec(10, 5, 200);
  try {
    training::train(ts.cfg, init, {ts.u_train, y_bad}, {ts.u_val, ts.y_val}, spec);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("prediction") != std::string::npos);
  }
}

TEST_CASE("NOE training improves the simulation criterion") {
  const TeacherSetup ts = make_teacher_setup(9, 0.02);
  const MlpParams init = model::init_params(ts.cfg, 1003);
  TrainSpec spec;
  spec.loss = LossKind::kSimulation;
  spec.criterion = EsCriterion::kSimulationVal;
  spec.max_epochs = 800;
  spec.patience = 800;
  spec.batch_size = 200;
  const training::TrainReport report = training::train(
      ts.cfg, init, {ts.u_train, ts.y_train}, {ts.u_val, ts.y_val}, spec);
  CHECK(report.best_val < report.trace.front()[1]);
}

TEST_CASE("grid search: single point equals a plain training run") {
  const TeacherSetup ts = make_teacher_setup(10, 0.02);
  const MlpParams init = model::init_params(ts.cfg, 1004);
  TrainSpec spec = basic_spec(40, 40, 200);
  spec.loss = LossKind::kDerivativeRegularized;
  spec.reg = narx::RegConfig{0.7, 1e-4, 4, 2};

  const auto grid = training::grid_search(ts.cfg, init, {ts.u_train, ts.y_train},
                                          {ts.u_val, ts.y_val}, {0.7}, {1e-4}, spec, 1);
  const auto single = training::train(ts.cfg, init, {ts.u_train, ts.y_train},
                                      {ts.u_val, ts.y_val}, spec);
  CHECK(grid.alpha == 0.7);
  CHECK(grid.gamma == 1e-4);
  CHECK(grid.report.best_val == single.best_val);
  CHECK(grid.report.best_params.to_flat() == single.best_params.to_flat());
}

TEST_CASE("grid search: selection is invariant to enumeration order and threading") {
  const TeacherSetup ts = make_teacher_setup(11, 0.02);
  const MlpParams init = model::init_params(ts.cfg, 1005);
  TrainSpec spec = basic_spec(30, 30, 200);
  spec.loss = LossKind::kDerivativeRegularized;
  spec.reg = narx::RegConfig{0.7, 1e-4, 4, 2};

  const std::vector<double> alphas{0.6, 0.75};
  const std::vector<double> gammas{1e-5, 1e-2};
  const auto forward_order = training::grid_search(ts.cfg, init, {ts.u_train, ts.y_train},
                                                   {ts.u_val, ts.y_val}, alphas, gammas, spec, 1);
  const std::vector<double> alphas_r{0.75, 0.6};
  const std::vector<double> gammas_r{1e-2, 1e-5};
  const auto reversed = training::grid_search(ts.cfg, init, {ts.u_train, ts.y_train},
                                              {ts.u_val, ts.y_val}, alphas_r, gammas_r, spec, 1);
  CHECK(forward_order.alpha == reversed.alpha);
  CHECK(forward_order.gamma == reversed.gamma);
  CHECK(forward_order.report.best_val == reversed.report.best_val);

  const auto threaded = training::grid_search(ts.cfg, init, {ts.u_train, ts.y_train},
                                              {ts.u_val, ts.y_val}, alphas, gammas, spec, 4);
  CHECK(threaded.alpha == forward_order.alpha);
  CHECK(threaded.gamma == forward_order.gamma);
  CHECK(threaded.report.best_val == forward_order.report.best_val);
  REQUIRE(threaded.points.size() == forward_order.points.size());
  for (std::size_t i = 0; i < threaded.points.size(); ++i)
    CHECK(threaded.points[i].best_val == forward_order.points[i].best_val);
}

TEST_CASE("grid search attaches the grid point to propagated failures") {
  const TeacherSetup ts = make_teacher_setup(12);
  std::vector<double> y_bad = ts.y_train;
  y_bad[10] = std::nan("");
  const MlpParams init = model::init_params(ts.cfg, 1006);
  TrainSpec spec = basic_spec(5, 5, 200);
  spec.loss = LossKind::kDerivativeRegularized;
  spec.reg = narx::RegConfig{0.7, 1e-4, 4, 2};
  try {
    training::grid_search(ts.cfg, init, {ts.u_train, y_bad}, {ts.u_val, ts.y_val}, {0.7},
                          {1e-4}, spec, 1);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("grid point") != std::string::npos);
    CHECK(msg.find("alpha=0.7") != std::string::npos);
  }
}

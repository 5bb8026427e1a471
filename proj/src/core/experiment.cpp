// SPDX-License-Identifier: Apache-2.0
#include "core/experiment.hpp"

#include <json.hpp>
#include <sstream>
#include <thread>

namespace narxid::experiment {

using nlohmann::json;

OrderConfig order_case_config(metrics::OrderCase c) {
  if (c == metrics::OrderCase::kHmo) return {20, 30, 30};
  return {10, 15, 15};
}

RunProfile desk_profile() {
  RunProfile p;
  p.name = "desk";
  p.runs = 3;
  p.max_epochs = 3000;
  p.patience = 300;
  p.anchor_stride = 4;
  p.alpha_grid = linspace(0.60, 0.75, 3);
  p.gamma_grid = logspace(5e-7, 5e-3, 3);
  return p;
}

RunProfile full_profile() {
  RunProfile p;
  p.name = "full";
  p.runs = 10;
  p.max_epochs = 10000;
  p.patience = 1000;
  p.anchor_stride = 1;
  p.alpha_grid = linspace(0.60, 0.75, 10);
  p.gamma_grid = logspace(5e-7, 5e-3, 10);
  return p;
}

namespace {

narx::Series as_series(const datagen::Dataset& ds) {
  return {std::span<const double>(ds.u), std::span<const double>(ds.y)};
}

int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

ModelOutcome estimate_model(metrics::ModelKind kind, const OrderConfig& order,
                            const datagen::Experiment& data, std::uint64_t init_seed,
                            const training::TrainSpec& base_spec, const narx::RegConfig* reg) {
  ModelOutcome out;
  out.kind = kind;

  if (kind == metrics::ModelKind::kLti) {
    out.model.fir_model = fir::fit_least_squares(data.train.u, data.train.y, order.n_b);
    return out;
  }

  narx::NarxConfig cfg{order.n_b, order.n_a, order.q, model::Activation::kTanh};
  const narx::MlpParams init = model::init_params(cfg, init_seed);

  training::TrainSpec spec = base_spec;
  switch (kind) {
    case metrics::ModelKind::kEs:
      spec.loss = training::LossKind::kPrediction;
      spec.criterion = training::EsCriterion::kPredictionVal;
      spec.reg.reset();
      break;
    case metrics::ModelKind::kDr:
      if (!reg) throw UsageError("estimate_model: regularizer config required for the DR kind");
      spec.loss = training::LossKind::kDerivativeRegularized;
      spec.criterion = training::EsCriterion::kPredictionVal;
      spec.reg = *reg;
      break;
    case metrics::ModelKind::kNoe:
      spec.loss = training::LossKind::kSimulation;
      spec.criterion = training::EsCriterion::kSimulationVal;
      spec.reg.reset();
      break;
    default:
      throw UsageError("estimate_model: unknown kind");
  }

  const training::TrainReport report =
      training::train(cfg, init, as_series(data.train), as_series(data.validation), spec);
  out.model.net_model = {cfg, report.best_params};
  out.best_val = report.best_val;
  out.epochs_run = report.epochs_run;
  if (reg) {
    out.alpha = reg->alpha;
    out.gamma = reg->gamma;
  }
  return out;
}

namespace {

void evaluate_on(const io::TrainedModel& model, const datagen::Dataset& ds,
                 const std::string& role, metrics::OrderCase order_case, metrics::ModelKind kind,
                 int run, std::vector<metrics::MetricRecord>& out) {
  if (model.is_fir()) {
    // The FIR model has no output feedback: its prediction is its simulation,
    // so only the simulation-mode record is emitted.
    const std::vector<double> yhat = fir::predict(*model.fir_model, ds.u);
    out.push_back({kind, order_case, role, metrics::EvalMode::kSimulation, run,
                   metrics::nrmse(ds.y, yhat)});
    return;
  }

  const auto& [cfg, params] = *model.net_model;

  narx::PredictionContext pred(cfg, as_series(ds));
  const Eigen::VectorXd yhat_one = pred.predictions(params);
  out.push_back({kind, order_case, role, metrics::EvalMode::kOneStep, run,
                 metrics::nrmse(std::span<const double>(pred.targets().data(),
                                                        static_cast<std::size_t>(pred.targets().size())),
                                std::span<const double>(yhat_one.data(),
                                                        static_cast<std::size_t>(yhat_one.size())))});

  const std::vector<double> sim = narx::simulate_free_run(
      cfg, params, ds.u, std::span<const double>(ds.y).subspan(0, static_cast<std::size_t>(cfg.n_a)));
  const std::span<const double> y_tail =
      std::span<const double>(ds.y).subspan(static_cast<std::size_t>(cfg.n_a));
  const std::span<const double> sim_tail =
      std::span<const double>(sim).subspan(static_cast<std::size_t>(cfg.n_a));
  out.push_back({kind, order_case, role, metrics::EvalMode::kSimulation, run,
                 metrics::nrmse(y_tail, sim_tail)});
}

}  // namespace

std::vector<metrics::MetricRecord> evaluate_model(const io::TrainedModel& model,
                                                  const datagen::Experiment& data,
                                                  metrics::OrderCase order_case,
                                                  metrics::ModelKind kind, int run) {
  std::vector<metrics::MetricRecord> out;
  evaluate_on(model, data.train, "train", order_case, kind, run, out);
  evaluate_on(model, data.white_test, "white_test", order_case, kind, run, out);
  evaluate_on(model, data.colored_test, "colored_test", order_case, kind, run, out);
  return out;
}

MonteCarloResult monte_carlo(const RunProfile& profile) {
  if (profile.runs < 1) throw UsageError("monte_carlo: need at least one run");
  if (profile.cases.empty()) throw UsageError("monte_carlo: need at least one order case");

  MonteCarloResult result;
  const int threads = effective_threads(profile.threads);

  for (int run = 0; run < profile.runs; ++run) {
    RunResult run_result;
    run_result.run = run;
    run_result.data_seed = derive_seed(profile.master_seed, 1000 + static_cast<std::uint64_t>(run));
    run_result.init_seed = derive_seed(profile.master_seed, 2000 + static_cast<std::uint64_t>(run));

    const datagen::Experiment data = datagen::generate_experiment(run_result.data_seed, profile.data);

    for (metrics::OrderCase order_case : profile.cases) {
      CaseResult case_result;
      case_result.order_case = order_case;
      const OrderConfig order = order_case_config(order_case);

      training::TrainSpec base_spec;
      base_spec.max_epochs = profile.max_epochs;
      base_spec.patience = profile.patience;
      base_spec.batch_size = profile.batch_size;
      base_spec.adam = profile.adam;

      try {
        // FIR baseline.
        ModelOutcome lti = estimate_model(metrics::ModelKind::kLti, order, data,
                                          run_result.init_seed, base_spec, nullptr);
        // Early-stopped network.
        ModelOutcome es = estimate_model(metrics::ModelKind::kEs, order, data,
                                         run_result.init_seed, base_spec, nullptr);
        // Derivative-regularized network, hyperparameters from the grid.
        narx::NarxConfig cfg{order.n_b, order.n_a, order.q, model::Activation::kTanh};
        const narx::MlpParams init = model::init_params(cfg, run_result.init_seed);
        training::TrainSpec dr_spec = base_spec;
        dr_spec.loss = training::LossKind::kDerivativeRegularized;
        dr_spec.criterion = training::EsCriterion::kPredictionVal;
        dr_spec.reg = narx::RegConfig{profile.alpha_grid.front(), profile.gamma_grid.front(),
                                      profile.t_steps, profile.anchor_stride};
        training::GridSearchResult grid = training::grid_search(
            cfg, init, as_series(data.train), as_series(data.validation), profile.alpha_grid,
            profile.gamma_grid, dr_spec, threads);
        ModelOutcome dr;
        dr.kind = metrics::ModelKind::kDr;
        dr.model.net_model = {cfg, grid.report.best_params};
        dr.best_val = grid.report.best_val;
        dr.epochs_run = grid.report.epochs_run;
        dr.alpha = grid.alpha;
        dr.gamma = grid.gamma;
        case_result.grid_points = grid.points;
        // Output-error network.
        ModelOutcome noe = estimate_model(metrics::ModelKind::kNoe, order, data,
                                          run_result.init_seed, base_spec, nullptr);

        for (const ModelOutcome& outcome : {lti, es, dr, noe}) {
          auto records = evaluate_model(outcome.model, data, order_case, outcome.kind, run);
          result.records.insert(result.records.end(), records.begin(), records.end());
        }

        if (run == 0 && order_case == metrics::OrderCase::kHmo) {
          result.decay_profile = metrics::decay_profile(cfg, dr.model.net_model->second,
                                                        as_series(data.train), profile.t_steps);
        }

        case_result.models = {lti, es, dr, noe};
        case_result.ok = true;
      } catch (const std::exception& e) {
        case_result.ok = false;
        case_result.error = e.what();
      }
      run_result.cases.push_back(std::move(case_result));
    }
    result.runs.push_back(std::move(run_result));
  }
  return result;
}

namespace {

constexpr const char* kRoles[] = {"train", "white_test", "colored_test"};
constexpr metrics::ModelKind kKinds[] = {metrics::ModelKind::kLti, metrics::ModelKind::kEs,
                                         metrics::ModelKind::kDr, metrics::ModelKind::kNoe};

std::string role_label(const std::string& role) {
  if (role == "train") return "training";
  return role;
}

}  // namespace

std::string render_table(const std::vector<metrics::MetricRecord>& records,
                         metrics::EvalMode mode) {
  const auto summaries = metrics::summarize(records);
  std::ostringstream out;
  out << "case,dataset,lti,es,dr,noe\n";
  for (metrics::OrderCase order_case : {metrics::OrderCase::kHmo, metrics::OrderCase::kOmo}) {
    bool any_case = false;
    for (const auto& [key, summary] : summaries) {
      (void)summary;
      if (key.rfind(metrics::order_case_name(order_case) + "/", 0) == 0) {
        any_case = true;
        break;
      }
    }
    if (!any_case) continue;
    for (const char* role : kRoles) {
      out << metrics::order_case_name(order_case) << ',' << role_label(role);
      for (metrics::ModelKind kind : kKinds) {
        const std::string key = metrics::group_key(kind, order_case, role, mode);
        const auto it = summaries.find(key);
        out << ',';
        if (it == summaries.end())
          out << '/';
        else
          out << io::format_double(it->second.median);
      }
      out << '\n';
    }
  }
  return out.str();
}

namespace {

std::string render_boxplot(const std::vector<metrics::MetricRecord>& records,
                           metrics::EvalMode mode) {
  const auto summaries = metrics::summarize(records);
  std::ostringstream out;
  out << "case,dataset,kind,min,q1,median,q3,max,count\n";
  for (metrics::OrderCase order_case : {metrics::OrderCase::kHmo, metrics::OrderCase::kOmo}) {
    for (const char* role : kRoles) {
      for (metrics::ModelKind kind : kKinds) {
        const std::string key = metrics::group_key(kind, order_case, role, mode);
        const auto it = summaries.find(key);
        if (it == summaries.end()) continue;
        const auto& s = it->second;
        out << metrics::order_case_name(order_case) << ',' << role_label(role) << ','
            << metrics::model_kind_name(kind) << ',' << io::format_double(s.min) << ','
            << io::format_double(s.q1) << ',' << io::format_double(s.median) << ','
            << io::format_double(s.q3) << ',' << io::format_double(s.max) << ',' << s.count
            << '\n';
      }
    }
  }
  return out.str();
}

json profile_to_json(const RunProfile& p) {
  json cases = json::array();
  for (auto c : p.cases) cases.push_back(metrics::order_case_name(c));
  return {{"name", p.name},
          {"runs", p.runs},
          {"cases", cases},
          {"max_epochs", p.max_epochs},
          {"patience", p.patience},
          {"batch_size", p.batch_size},
          {"t_steps", p.t_steps},
          {"anchor_stride", p.anchor_stride},
          {"alpha_grid", p.alpha_grid},
          {"gamma_grid", p.gamma_grid},
          {"adam",
           {{"lr", p.adam.lr}, {"beta1", p.adam.beta1}, {"beta2", p.adam.beta2}, {"eps", p.adam.eps}}},
          {"data",
           {{"n_train_record", p.data.n_train_record},
            {"n_test", p.data.n_test},
            {"sigma_v", p.data.sigma_v},
            {"train_band_fraction", p.data.train_band_fraction},
            {"white_band_fraction", p.data.white_band_fraction},
            {"colored_band_fraction", p.data.colored_band_fraction}}},
          {"master_seed", p.master_seed},
          {"threads", p.threads}};
}

}  // namespace

std::string reproduce(const RunProfile& profile, const std::filesystem::path& out_dir) {
  const MonteCarloResult mc = monte_carlo(profile);
  std::filesystem::create_directories(out_dir);

  io::write_text_file(out_dir / "records.csv", io::records_to_csv(mc.records));
  io::write_text_file(out_dir / "records.json", io::records_to_json(mc.records));

  const std::string table_sim = render_table(mc.records, metrics::EvalMode::kSimulation);
  const std::string table_one = render_table(mc.records, metrics::EvalMode::kOneStep);
  io::write_text_file(out_dir / "table_simulation.csv", table_sim);
  io::write_text_file(out_dir / "table_onestep.csv", table_one);
  io::write_text_file(out_dir / "boxplot_simulation.csv",
                      render_boxplot(mc.records, metrics::EvalMode::kSimulation));

  if (!mc.decay_profile.empty()) {
    std::ostringstream profile_csv;
    profile_csv << "k,mean_abs_sensitivity\n";
    for (std::size_t k = 0; k < mc.decay_profile.size(); ++k)
      profile_csv << k << ',' << io::format_double(mc.decay_profile[k]) << '\n';
    io::write_text_file(out_dir / "decay_profile.csv", profile_csv.str());
  }

  json hyper = json::array();
  json manifest_runs = json::array();
  for (const RunResult& run : mc.runs) {
    json run_cases = json::array();
    for (const CaseResult& c : run.cases) {
      json models = json::array();
      for (const ModelOutcome& m : c.models) {
        json jm = {{"kind", metrics::model_kind_name(m.kind)},
                   {"best_val", m.best_val},
                   {"epochs_run", m.epochs_run}};
        if (m.kind == metrics::ModelKind::kDr) {
          jm["alpha"] = m.alpha;
          jm["gamma"] = m.gamma;
          json grid = json::array();
          for (const auto& pt : c.grid_points)
            grid.push_back({{"alpha", pt.alpha}, {"gamma", pt.gamma}, {"best_val", pt.best_val}});
          hyper.push_back({{"run", run.run},
                           {"case", metrics::order_case_name(c.order_case)},
                           {"alpha", m.alpha},
                           {"gamma", m.gamma},
                           {"grid", grid}});
        }
        models.push_back(jm);
      }
      run_cases.push_back({{"case", metrics::order_case_name(c.order_case)},
                           {"ok", c.ok},
                           {"error", c.error},
                           {"models", models}});
    }
    manifest_runs.push_back({{"run", run.run},
                             {"data_seed", run.data_seed},
                             {"init_seed", run.init_seed},
                             {"cases", run_cases}});
  }
  io::write_text_file(out_dir / "hyperparams.json", hyper.dump(2) + "\n");

  const json manifest = {{"profile", profile_to_json(profile)}, {"runs", manifest_runs}};
  io::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  // Run-0 models, reloadable with the evaluate command.
  if (!mc.runs.empty()) {
    for (const CaseResult& c : mc.runs.front().cases) {
      if (!c.ok) continue;
      for (const ModelOutcome& m : c.models) {
        const std::string name = "run0_" + metrics::order_case_name(c.order_case) + "_" +
                                 metrics::model_kind_name(m.kind) + ".json";
        io::save_model(m.model, out_dir / "models" / name);
      }
    }
  }

  const json summary = {{"table_simulation_csv", table_sim},
                        {"table_onestep_csv", table_one},
                        {"records", mc.records.size()}};
  return summary.dump(2) + "\n";
}

}  // namespace narxid::experiment

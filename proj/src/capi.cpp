// SPDX-License-Identifier: Apache-2.0
#include "narxid.h"

#include <cstring>
#include <json.hpp>
#include <new>
#include <string>
#include <thread>

#include "core/experiment.hpp"

using nlohmann::json;
using namespace narxid;

struct narxid_experiment {
  datagen::Experiment data;
};

struct narxid_model {
  io::TrainedModel model;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

narxid_status fail(narxid_status code, const char* what) {
  g_last_error = what ? what : "";
  return code;
}

// Runs fn, translating the core error taxonomy onto status codes.
template <class Fn>
narxid_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NARXID_OK;
  } catch (const UsageError& e) {
    return fail(NARXID_ERR_USAGE, e.what());
  } catch (const DataError& e) {
    return fail(NARXID_ERR_DATA, e.what());
  } catch (const NumericError& e) {
    return fail(NARXID_ERR_NUMERIC, e.what());
  } catch (const json::exception& e) {
    return fail(NARXID_ERR_USAGE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(NARXID_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(NARXID_ERR_NUMERIC, e.what());
  }
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  const json j = json::parse(text);
  if (!j.is_object()) throw UsageError("options must be a JSON object");
  return j;
}

datagen::ExperimentConfig data_config_from_json(const json& j) {
  datagen::ExperimentConfig cfg;
  cfg.n_train_record = j.value("n_train_record", cfg.n_train_record);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.sigma_v = j.value("sigma_v", cfg.sigma_v);
  cfg.train_band_fraction = j.value("train_band_fraction", cfg.train_band_fraction);
  cfg.white_band_fraction = j.value("white_band_fraction", cfg.white_band_fraction);
  cfg.colored_band_fraction = j.value("colored_band_fraction", cfg.colored_band_fraction);
  return cfg;
}

struct ParsedSpec {
  metrics::ModelKind kind = metrics::ModelKind::kEs;
  experiment::OrderConfig order;
  std::uint64_t seed = 0;
  training::TrainSpec spec;
  narx::RegConfig reg;
  std::vector<double> alpha_grid;
  std::vector<double> gamma_grid;
  int threads = 1;
};

ParsedSpec parse_train_spec(const char* text, bool for_grid) {
  const json j = parse_options(text);
  ParsedSpec p;
  const std::string kind = j.value("kind", for_grid ? "dr" : "es");
  p.kind = metrics::model_kind_from_name(kind);

  const std::string order_case = j.value("case", "hmo");
  p.order = experiment::order_case_config(metrics::order_case_from_name(order_case));
  p.order.q = j.value("q", p.order.q);
  p.order.n_a = j.value("n_a", p.order.n_a);
  p.order.n_b = j.value("n_b", p.order.n_b);

  p.seed = j.value("seed", static_cast<std::uint64_t>(0));
  p.spec.max_epochs = j.value("max_epochs", 10000);
  p.spec.patience = j.value("patience", 1000);
  p.spec.batch_size = j.value("batch_size", 1024);
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    p.spec.adam.lr = a.value("lr", p.spec.adam.lr);
    p.spec.adam.beta1 = a.value("beta1", p.spec.adam.beta1);
    p.spec.adam.beta2 = a.value("beta2", p.spec.adam.beta2);
    p.spec.adam.eps = a.value("eps", p.spec.adam.eps);
  }
  if (j.contains("reg")) {
    const json& r = j.at("reg");
    p.reg.alpha = r.value("alpha", p.reg.alpha);
    p.reg.gamma = r.value("gamma", p.reg.gamma);
    p.reg.t_steps = r.value("t_steps", 50);
    p.reg.anchor_stride = r.value("anchor_stride", 1);
  } else {
    p.reg.t_steps = 50;
  }
  if (for_grid) {
    if (j.contains("alpha_grid"))
      p.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    else
      p.alpha_grid = linspace(0.60, 0.75, 10);
    if (j.contains("gamma_grid"))
      p.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    else
      p.gamma_grid = logspace(5e-7, 5e-3, 10);
    p.threads = j.value("threads", 0);
  }
  return p;
}

}  // namespace

extern "C" {

const char* narxid_version(void) { return "0.1.0"; }

const char* narxid_last_error(void) { return g_last_error.c_str(); }

void narxid_string_free(char* s) { delete[] s; }

narxid_status narxid_experiment_generate(uint64_t seed, const char* options_json,
                                         narxid_experiment** out) {
  if (!out) return fail(NARXID_ERR_USAGE, "null output pointer");
  return guarded([&] {
    const json j = parse_options(options_json);
    auto* handle = new narxid_experiment{datagen::generate_experiment(seed, data_config_from_json(j))};
    *out = handle;
  });
}

narxid_status narxid_experiment_save(const narxid_experiment* exp, const char* dir) {
  if (!exp || !dir) return fail(NARXID_ERR_USAGE, "null experiment or directory");
  return guarded([&] { io::save_experiment(exp->data, dir); });
}

narxid_status narxid_experiment_load(const char* dir, narxid_experiment** out) {
  if (!dir || !out) return fail(NARXID_ERR_USAGE, "null directory or output pointer");
  return guarded([&] { *out = new narxid_experiment{io::load_experiment(dir)}; });
}

void narxid_experiment_free(narxid_experiment* exp) { delete exp; }

narxid_status narxid_train(const narxid_experiment* exp, const char* spec_json,
                           narxid_model** out_model, char** out_report_json) {
  if (!exp || !out_model) return fail(NARXID_ERR_USAGE, "null experiment or output pointer");
  return guarded([&] {
    const ParsedSpec p = parse_train_spec(spec_json, false);
    const experiment::ModelOutcome outcome = experiment::estimate_model(
        p.kind, p.order, exp->data, p.seed, p.spec,
        p.kind == metrics::ModelKind::kDr ? &p.reg : nullptr);
    *out_model = new narxid_model{outcome.model};
    if (out_report_json) {
      const json report = {{"kind", metrics::model_kind_name(outcome.kind)},
                           {"best_val", outcome.best_val},
                           {"epochs_run", outcome.epochs_run},
                           {"alpha", outcome.alpha},
                           {"gamma", outcome.gamma}};
      *out_report_json = dup_string(report.dump(2) + "\n");
    }
  });
}

narxid_status narxid_grid_search(const narxid_experiment* exp, const char* spec_json,
                                 narxid_model** out_model, char** out_report_json) {
  if (!exp || !out_model) return fail(NARXID_ERR_USAGE, "null experiment or output pointer");
  return guarded([&] {
    ParsedSpec p = parse_train_spec(spec_json, true);
    if (p.kind != metrics::ModelKind::kDr)
      throw UsageError("grid search applies to the derivative-regularized kind");
    narx::NarxConfig cfg{p.order.n_b, p.order.n_a, p.order.q, model::Activation::kTanh};
    const narx::MlpParams init = model::init_params(cfg, p.seed);
    p.spec.loss = training::LossKind::kDerivativeRegularized;
    p.spec.criterion = training::EsCriterion::kPredictionVal;
    p.spec.reg = p.reg;
    const narx::Series train_data{std::span<const double>(exp->data.train.u),
                                  std::span<const double>(exp->data.train.y)};
    const narx::Series val_data{std::span<const double>(exp->data.validation.u),
                                std::span<const double>(exp->data.validation.y)};
    const int threads = p.threads > 0 ? p.threads
                                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    training::GridSearchResult grid = training::grid_search(
        cfg, init, train_data, val_data, p.alpha_grid, p.gamma_grid, p.spec, threads);
    auto* handle = new narxid_model;
    handle->model.net_model = {cfg, grid.report.best_params};
    *out_model = handle;
    if (out_report_json) {
      json points = json::array();
      for (const auto& pt : grid.points)
        points.push_back({{"alpha", pt.alpha}, {"gamma", pt.gamma}, {"best_val", pt.best_val}});
      const json report = {{"alpha", grid.alpha},
                           {"gamma", grid.gamma},
                           {"best_val", grid.report.best_val},
                           {"epochs_run", grid.report.epochs_run},
                           {"grid", points}};
      *out_report_json = dup_string(report.dump(2) + "\n");
    }
  });
}

narxid_status narxid_model_save(const narxid_model* model, const char* path) {
  if (!model || !path) return fail(NARXID_ERR_USAGE, "null model or path");
  return guarded([&] { io::save_model(model->model, path); });
}

narxid_status narxid_model_load(const char* path, narxid_model** out) {
  if (!path || !out) return fail(NARXID_ERR_USAGE, "null path or output pointer");
  return guarded([&] { *out = new narxid_model{io::load_model(path)}; });
}

void narxid_model_free(narxid_model* model) { delete model; }

narxid_status narxid_evaluate(const narxid_model* model, const narxid_experiment* exp,
                              char** out_records_json) {
  if (!model || !exp || !out_records_json)
    return fail(NARXID_ERR_USAGE, "null model, experiment, or output pointer");
  return guarded([&] {
    const metrics::ModelKind kind =
        model->model.is_fir() ? metrics::ModelKind::kLti : metrics::ModelKind::kEs;
    const auto records =
        experiment::evaluate_model(model->model, exp->data, metrics::OrderCase::kHmo, kind, 0);
    *out_records_json = dup_string(io::records_to_json(records));
  });
}

narxid_status narxid_reproduce(const char* options_json, const char* out_dir,
                               char** out_summary_json) {
  if (!out_dir) return fail(NARXID_ERR_USAGE, "null output directory");
  return guarded([&] {
    const json j = parse_options(options_json);
    const std::string scale = j.value("scale", "desk");
    experiment::RunProfile profile;
    if (scale == "desk")
      profile = experiment::desk_profile();
    else if (scale == "full")
      profile = experiment::full_profile();
    else
      throw UsageError("unknown scale: " + scale);
    profile.master_seed = j.value("master_seed", profile.master_seed);
    profile.runs = j.value("runs", profile.runs);
    profile.max_epochs = j.value("max_epochs", profile.max_epochs);
    profile.patience = j.value("patience", profile.patience);
    profile.batch_size = j.value("batch_size", profile.batch_size);
    profile.t_steps = j.value("t_steps", profile.t_steps);
    profile.anchor_stride = j.value("anchor_stride", profile.anchor_stride);
    profile.threads = j.value("threads", profile.threads);
    if (j.contains("alpha_grid")) profile.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    if (j.contains("gamma_grid")) profile.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    if (j.contains("cases")) {
      profile.cases.clear();
      for (const auto& c : j.at("cases"))
        profile.cases.push_back(metrics::order_case_from_name(c.get<std::string>()));
    }
    if (j.contains("q") || j.contains("n_a") || j.contains("n_b"))
      throw UsageError("reproduce runs the fixed benchmark orders; use train for custom orders");
    if (j.contains("data")) profile.data = data_config_from_json(j.at("data"));

    const std::string summary = experiment::reproduce(profile, out_dir);
    if (out_summary_json) *out_summary_json = dup_string(summary);
  });
}

}  // extern "C"

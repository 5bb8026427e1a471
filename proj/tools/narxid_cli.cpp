// SPDX-License-Identifier: Apache-2.0
//
// Command-line experiment runner on top of the narxid C API.
//
// Subcommands: generate | train | evaluate | grid-search | reproduce.
// Every option can also come from a key=value config file (--config); command
// line flags override the file. Exit codes: 0 ok, 1 usage, 2 data, 3 numeric.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <narxid.h>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int report_status(narxid_status status, const char* action) {
  if (status == NARXID_OK) return 0;
  std::fprintf(stderr, "narxid: %s failed: %s\n", action, narxid_last_error());
  return static_cast<int>(status);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  narxid_string_free(s);
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CLI::ValidationError("cannot write " + path.string());
  out << content;
}

// Grid syntax: "lo:hi:count", "lo:hi:count:log", or comma-separated values.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') == std::string::npos) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw CLI::ValidationError("empty grid: " + text);
    return out;
  }
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3 && parts.size() != 4)
    throw CLI::ValidationError("grid must be lo:hi:count[:log] or v1,v2,...: " + text);
  const double lo = std::stod(parts[0]);
  const double hi = std::stod(parts[1]);
  const int count = std::stoi(parts[2]);
  const bool logspaced = parts.size() == 4 && parts[3] == "log";
  if (count < 1) throw CLI::ValidationError("grid needs at least one point");
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(logspaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                            : lo + f * (hi - lo));
  }
  return out;
}

std::string records_json_to_csv(const json& records) {
  std::string csv = "run,case,kind,role,mode,nrmse\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.at("nrmse").get<double>());
    csv += std::to_string(r.at("run").get<int>()) + "," + r.at("case").get<std::string>() + "," +
           r.at("kind").get<std::string>() + "," + r.at("role").get<std::string>() + "," +
           r.at("mode").get<std::string>() + "," + buf + "\n";
  }
  return csv;
}

struct ExperimentHandle {
  narxid_experiment* ptr = nullptr;
  ~ExperimentHandle() { narxid_experiment_free(ptr); }
};

struct ModelHandle {
  narxid_model* ptr = nullptr;
  ~ModelHandle() { narxid_model_free(ptr); }
};

// Shared training options across train/grid-search.
struct TrainOptions {
  std::string data_dir;
  std::string out_dir = ".";
  std::string kind = "es";
  std::string order_case = "hmo";
  int q = -1, n_a = -1, n_b = -1;
  std::uint64_t seed = 0;
  int max_epochs = 10000;
  int patience = 1000;
  int batch_size = 1024;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double alpha = 0.7, gamma = 0.0;
  int t_steps = 50, anchor_stride = 1;

  json to_spec() const {
    json spec = {{"kind", kind},
                 {"case", order_case},
                 {"seed", seed},
                 {"max_epochs", max_epochs},
                 {"patience", patience},
                 {"batch_size", batch_size},
                 {"adam", {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}}}};
    if (q >= 0) spec["q"] = q;
    if (n_a >= 0) spec["n_a"] = n_a;
    if (n_b >= 0) spec["n_b"] = n_b;
    if (kind == "dr")
      spec["reg"] = {{"alpha", alpha},
                     {"gamma", gamma},
                     {"t_steps", t_steps},
                     {"anchor_stride", anchor_stride}};
    return spec;
  }
};

void add_train_options(CLI::App* cmd, TrainOptions& opt, bool for_grid) {
  cmd->add_option("--data", opt.data_dir, "Dataset directory (from `generate`)")->required();
  cmd->add_option("--out", opt.out_dir, "Output directory");
  if (!for_grid)
    cmd->add_option("--kind", opt.kind, "Model kind: lti | es | dr | noe")
        ->check(CLI::IsMember({"lti", "es", "dr", "noe"}));
  cmd->add_option("--case", opt.order_case, "Model order case: hmo | omo")
      ->check(CLI::IsMember({"hmo", "omo"}));
  cmd->add_option("--q", opt.q, "Hidden units (overrides --case)");
  cmd->add_option("--na", opt.n_a, "Output lags (overrides --case)");
  cmd->add_option("--nb", opt.n_b, "Input lags (overrides --case)");
  cmd->add_option("--seed", opt.seed, "Initialization seed");
  cmd->add_option("--epochs", opt.max_epochs, "Maximum training epochs");
  cmd->add_option("--patience", opt.patience, "Early-stopping patience (epochs)");
  cmd->add_option("--batch", opt.batch_size, "Batch size (must cover the record)");
  cmd->add_option("--lr", opt.lr, "Adam learning rate");
  cmd->add_option("--beta1", opt.beta1, "Adam beta1");
  cmd->add_option("--beta2", opt.beta2, "Adam beta2");
  cmd->add_option("--eps", opt.eps, "Adam epsilon");
  if (!for_grid) {
    cmd->add_option("--alpha", opt.alpha, "Sensitivity decay base (dr)");
    cmd->add_option("--gamma", opt.gamma, "Regularization weight (dr)");
  }
  cmd->add_option("--t-steps", opt.t_steps, "Simulation depth T (dr)");
  cmd->add_option("--anchor-stride", opt.anchor_stride, "Anchor subsampling stride (dr)");
  cmd->set_config("--config", "", "key=value config file; flags override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"narxid - NARX system identification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(narxid_version()));

  // generate ---------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "Generate the benchmark dataset bundle");
  std::string gen_out;
  std::uint64_t gen_seed = 1;
  int n_train_record = 1024, n_test = 10000;
  double sigma_v = 0.01, train_band = 0.5, white_band = 0.5, colored_band = 0.1;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Master data seed");
  gen->add_option("--n-train", n_train_record, "Training record length (split 80/20)");
  gen->add_option("--n-test", n_test, "Test record length");
  gen->add_option("--sigma-v", sigma_v, "Output noise standard deviation");
  gen->add_option("--train-band", train_band, "Training multisine band fraction");
  gen->add_option("--white-band", white_band, "White test band fraction");
  gen->add_option("--colored-band", colored_band, "Colored test band fraction");
  gen->set_config("--config", "", "key=value config file; flags override");

  // train ------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Estimate one model");
  TrainOptions topt;
  add_train_options(train_cmd, topt, false);

  // grid-search ------------------------------------------------------------
  auto* grid_cmd =
      app.add_subcommand("grid-search", "Derivative-regularized model with a hyperparameter grid");
  TrainOptions gopt;
  std::string alpha_grid = "0.6:0.75:10", gamma_grid = "5e-7:5e-3:10:log";
  int grid_threads = 0;
  add_train_options(grid_cmd, gopt, true);
  grid_cmd->add_option("--alpha-grid", alpha_grid, "Grid: lo:hi:count[:log] or v1,v2,...");
  grid_cmd->add_option("--gamma-grid", gamma_grid, "Grid: lo:hi:count[:log] or v1,v2,...");
  grid_cmd->add_option("--threads", grid_threads, "Worker threads (0 = auto)");

  // evaluate ---------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "NRMSE records for a saved model");
  std::string eval_model, eval_data, eval_out = ".";
  eval_cmd->add_option("--model", eval_model, "Model file (JSON)")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "Output directory");
  eval_cmd->set_config("--config", "", "key=value config file; flags override");

  // reproduce --------------------------------------------------------------
  auto* rep_cmd = app.add_subcommand("reproduce", "Run the full benchmark protocol");
  std::string rep_scale = "desk", rep_out, rep_cases = "hmo,omo";
  std::uint64_t rep_seed = 1;
  int rep_runs = -1, rep_threads = 0, rep_epochs = -1, rep_patience = -1;
  int rep_t_steps = -1, rep_stride = -1;
  std::string rep_alpha_grid, rep_gamma_grid;
  rep_cmd->add_option("--scale", rep_scale, "desk | full")
      ->check(CLI::IsMember({"desk", "full"}));
  rep_cmd->add_option("--out", rep_out, "Output directory")->required();
  rep_cmd->add_option("--seed", rep_seed, "Master seed");
  rep_cmd->add_option("--runs", rep_runs, "Monte-Carlo runs (override)");
  rep_cmd->add_option("--threads", rep_threads, "Worker threads (0 = auto)");
  rep_cmd->add_option("--cases", rep_cases, "Comma-separated order cases (hmo,omo)");
  rep_cmd->add_option("--epochs", rep_epochs, "Maximum epochs (override)");
  rep_cmd->add_option("--patience", rep_patience, "Early-stopping patience (override)");
  rep_cmd->add_option("--t-steps", rep_t_steps, "Simulation depth (override)");
  rep_cmd->add_option("--anchor-stride", rep_stride, "Anchor stride (override)");
  rep_cmd->add_option("--alpha-grid", rep_alpha_grid, "Alpha grid (override)");
  rep_cmd->add_option("--gamma-grid", rep_gamma_grid, "Gamma grid (override)");
  rep_cmd->set_config("--config", "", "key=value config file; flags override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const json options = {{"n_train_record", n_train_record},
                            {"n_test", n_test},
                            {"sigma_v", sigma_v},
                            {"train_band_fraction", train_band},
                            {"white_band_fraction", white_band},
                            {"colored_band_fraction", colored_band}};
      ExperimentHandle exp;
      if (int rc = report_status(
              narxid_experiment_generate(gen_seed, options.dump().c_str(), &exp.ptr), "generate"))
        return rc;
      if (int rc = report_status(narxid_experiment_save(exp.ptr, gen_out.c_str()), "save"))
        return rc;
      std::printf("wrote dataset bundle to %s\n", gen_out.c_str());
      return 0;
    }

    if (*train_cmd) {
      ExperimentHandle exp;
      if (int rc = report_status(narxid_experiment_load(topt.data_dir.c_str(), &exp.ptr),
                                 "load datasets"))
        return rc;
      ModelHandle model;
      char* report_raw = nullptr;
      if (int rc = report_status(
              narxid_train(exp.ptr, topt.to_spec().dump().c_str(), &model.ptr, &report_raw),
              "train"))
        return rc;
      const fs::path out(topt.out_dir);
      if (int rc = report_status(narxid_model_save(model.ptr, (out / "model.json").c_str()),
                                 "save model"))
        return rc;
      write_file(out / "report.json", take_string(report_raw));
      std::printf("wrote %s and report.json\n", (out / "model.json").c_str());
      return 0;
    }

    if (*grid_cmd) {
      ExperimentHandle exp;
      if (int rc = report_status(narxid_experiment_load(gopt.data_dir.c_str(), &exp.ptr),
                                 "load datasets"))
        return rc;
      gopt.kind = "dr";
      json spec = gopt.to_spec();
      spec["reg"] = {{"t_steps", gopt.t_steps}, {"anchor_stride", gopt.anchor_stride}};
      spec["alpha_grid"] = parse_grid(alpha_grid);
      spec["gamma_grid"] = parse_grid(gamma_grid);
      spec["threads"] = grid_threads;
      ModelHandle model;
      char* report_raw = nullptr;
      if (int rc = report_status(
              narxid_grid_search(exp.ptr, spec.dump().c_str(), &model.ptr, &report_raw),
              "grid-search"))
        return rc;
      const fs::path out(gopt.out_dir);
      if (int rc = report_status(narxid_model_save(model.ptr, (out / "model.json").c_str()),
                                 "save model"))
        return rc;
      const std::string report = take_string(report_raw);
      write_file(out / "report.json", report);
      const json rj = json::parse(report);
      std::printf("selected alpha=%g gamma=%g (val %.6g); wrote model.json and report.json\n",
                  rj.at("alpha").get<double>(), rj.at("gamma").get<double>(),
                  rj.at("best_val").get<double>());
      return 0;
    }

    if (*eval_cmd) {
      ExperimentHandle exp;
      if (int rc = report_status(narxid_experiment_load(eval_data.c_str(), &exp.ptr),
                                 "load datasets"))
        return rc;
      ModelHandle model;
      if (int rc = report_status(narxid_model_load(eval_model.c_str(), &model.ptr), "load model"))
        return rc;
      char* records_raw = nullptr;
      if (int rc = report_status(narxid_evaluate(model.ptr, exp.ptr, &records_raw), "evaluate"))
        return rc;
      const std::string records_text = take_string(records_raw);
      const fs::path out(eval_out);
      write_file(out / "metrics.json", records_text);
      const std::string csv = records_json_to_csv(json::parse(records_text));
      write_file(out / "metrics.csv", csv);
      std::printf("%s", csv.c_str());
      return 0;
    }

    if (*rep_cmd) {
      json options = {{"scale", rep_scale}, {"master_seed", rep_seed}, {"threads", rep_threads}};
      if (rep_runs > 0) options["runs"] = rep_runs;
      if (rep_epochs > 0) options["max_epochs"] = rep_epochs;
      if (rep_patience > 0) options["patience"] = rep_patience;
      if (rep_t_steps > 0) options["t_steps"] = rep_t_steps;
      if (rep_stride > 0) options["anchor_stride"] = rep_stride;
      if (!rep_alpha_grid.empty()) options["alpha_grid"] = parse_grid(rep_alpha_grid);
      if (!rep_gamma_grid.empty()) options["gamma_grid"] = parse_grid(rep_gamma_grid);
      {
        json cases = json::array();
        std::stringstream ss(rep_cases);
        std::string c;
        while (std::getline(ss, c, ',')) cases.push_back(c);
        options["cases"] = cases;
      }
      char* summary_raw = nullptr;
      if (int rc = report_status(
              narxid_reproduce(options.dump().c_str(), rep_out.c_str(), &summary_raw),
              "reproduce"))
        return rc;
      const json summary = json::parse(take_string(summary_raw));
      std::printf("== median NRMSE, one-step ==\n%s\n",
                  summary.at("table_onestep_csv").get<std::string>().c_str());
      std::printf("== median NRMSE, simulation ==\n%s\n",
                  summary.at("table_simulation_csv").get<std::string>().c_str());
      std::printf("bundle written to %s\n", rep_out.c_str());
      return 0;
    }
  } catch (const json::exception& e) {
    std::fprintf(stderr, "narxid: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "narxid: %s\n", e.what());
    return 1;
  }
  return 0;
}

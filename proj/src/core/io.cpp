// SPDX-License-Identifier: Apache-2.0
#include "core/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace narxid::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_dataset(const std::filesystem::path& dir, const std::string& name,
                  const datagen::Dataset& ds, std::uint64_t seed, double sigma_v,
                  double band_fraction) {
  std::ostringstream csv;
  csv << "t,u,y,y0\n";
  for (std::size_t t = 0; t < ds.u.size(); ++t) {
    csv << t << ',' << format_double(ds.u[t]) << ',' << format_double(ds.y[t]) << ','
        << format_double(ds.y0[t]) << '\n';
  }
  write_text_file(dir / (name + ".csv"), csv.str());

  json sidecar = {
      {"role", datagen::role_name(ds.role)},
      {"n", ds.u.size()},
      {"seed", seed},
      {"sigma_v", sigma_v},
      {"band_fraction", band_fraction},
  };
  write_text_file(dir / (name + ".json"), sidecar.dump(2) + "\n");
}

datagen::Dataset load_dataset(const std::filesystem::path& dir, const std::string& name) {
  const std::string csv = read_text_file(dir / (name + ".csv"));
  datagen::Dataset ds;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,u,y,y0", 0) != 0)
    throw DataError("malformed dataset CSV header in " + (dir / (name + ".csv")).string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    double vals[3];
    if (!std::getline(row, field, ',')) throw DataError("malformed dataset row: " + line);
    for (double& val : vals) {
      if (!std::getline(row, field, ',')) throw DataError("malformed dataset row: " + line);
      try {
        val = std::stod(field);
      } catch (const std::exception&) {
        throw DataError("malformed number in dataset row: " + line);
      }
    }
    ds.u.push_back(vals[0]);
    ds.y.push_back(vals[1]);
    ds.y0.push_back(vals[2]);
  }
  if (ds.u.empty()) throw DataError("empty dataset: " + (dir / (name + ".csv")).string());

  const json sidecar = json::parse(read_text_file(dir / (name + ".json")));
  ds.role = datagen::role_from_name(sidecar.at("role").get<std::string>());
  return ds;
}

void save_experiment(const datagen::Experiment& exp, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& cfg = exp.config;
  save_dataset(dir, "train", exp.train, exp.seed, cfg.sigma_v, cfg.train_band_fraction);
  save_dataset(dir, "val", exp.validation, exp.seed, cfg.sigma_v, cfg.train_band_fraction);
  save_dataset(dir, "white_test", exp.white_test, exp.seed, 0.0, cfg.white_band_fraction);
  save_dataset(dir, "colored_test", exp.colored_test, exp.seed, 0.0, cfg.colored_band_fraction);
}

datagen::Experiment load_experiment(const std::filesystem::path& dir) {
  datagen::Experiment exp;
  exp.train = load_dataset(dir, "train");
  exp.validation = load_dataset(dir, "val");
  exp.white_test = load_dataset(dir, "white_test");
  exp.colored_test = load_dataset(dir, "colored_test");

  const json sidecar = json::parse(read_text_file(dir / "train.json"));
  exp.seed = sidecar.at("seed").get<std::uint64_t>();
  exp.config.sigma_v = sidecar.at("sigma_v").get<double>();
  exp.config.train_band_fraction = sidecar.at("band_fraction").get<double>();
  exp.config.n_train_record =
      static_cast<int>(exp.train.u.size() + exp.validation.u.size());
  exp.config.n_test = static_cast<int>(exp.white_test.u.size());
  return exp;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  json j;
  if (model.is_fir()) {
    j = json::array();
    for (double g : model.fir_model->g) j.push_back(g);
  } else if (model.net_model) {
    const auto& [cfg, params] = *model.net_model;
    const Eigen::VectorXd flat = params.to_flat();
    json theta = json::array();
    for (Eigen::Index i = 0; i < flat.size(); ++i) theta.push_back(flat(i));
    j = {{"type", "narx"},
         {"n_b", cfg.n_b},
         {"n_a", cfg.n_a},
         {"q", cfg.q},
         {"activation", cfg.activation == model::Activation::kTanh ? "tanh" : "identity"},
         {"theta", theta}};
  } else {
    throw UsageError("save_model: empty model");
  }
  write_text_file(path, j.dump(2) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  TrainedModel model;
  if (j.is_array()) {
    fir::FirModel fir;
    for (const auto& v : j) fir.g.push_back(v.get<double>());
    if (fir.g.empty()) throw DataError("empty FIR model: " + path.string());
    model.fir_model = fir;
    return model;
  }
  if (!j.is_object() || j.value("type", "") != "narx")
    throw DataError("unrecognized model file: " + path.string());
  narx::NarxConfig cfg;
  cfg.n_b = j.at("n_b").get<int>();
  cfg.n_a = j.at("n_a").get<int>();
  cfg.q = j.at("q").get<int>();
  const std::string act = j.value("activation", "tanh");
  cfg.activation = act == "identity" ? model::Activation::kIdentity : model::Activation::kTanh;
  cfg.validate();
  const auto& theta = j.at("theta");
  Eigen::VectorXd flat(static_cast<Eigen::Index>(theta.size()));
  for (std::size_t i = 0; i < theta.size(); ++i)
    flat(static_cast<Eigen::Index>(i)) = theta[i].get<double>();
  model.net_model = {cfg, narx::MlpParams::from_flat(cfg, flat)};
  return model;
}

std::string report_to_json(const training::TrainReport& report) {
  json trace = json::array();
  for (const auto& row : report.trace) trace.push_back({row[0], row[1]});
  const json j = {{"best_val", report.best_val},
                  {"best_epoch", report.best_epoch},
                  {"epochs_run", report.epochs_run},
                  {"trace", trace}};
  return j.dump(2) + "\n";
}

namespace {

json record_to_json(const metrics::MetricRecord& r) {
  return {{"run", r.run},
          {"case", metrics::order_case_name(r.order_case)},
          {"kind", metrics::model_kind_name(r.model_kind)},
          {"role", r.dataset_role},
          {"mode", metrics::eval_mode_name(r.mode)},
          {"nrmse", r.nrmse}};
}

}  // namespace

std::string records_to_json(const std::vector<metrics::MetricRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr.dump(2) + "\n";
}

std::string records_to_csv(const std::vector<metrics::MetricRecord>& records) {
  std::ostringstream out;
  out << "run,case,kind,role,mode,nrmse\n";
  for (const auto& r : records) {
    out << r.run << ',' << metrics::order_case_name(r.order_case) << ','
        << metrics::model_kind_name(r.model_kind) << ',' << r.dataset_role << ','
        << metrics::eval_mode_name(r.mode) << ',' << format_double(r.nrmse) << '\n';
  }
  return out.str();
}

std::vector<metrics::MetricRecord> records_from_json(const std::string& text) {
  const json arr = json::parse(text);
  std::vector<metrics::MetricRecord> out;
  for (const auto& j : arr) {
    metrics::MetricRecord r;
    r.run = j.at("run").get<int>();
    r.order_case = metrics::order_case_from_name(j.at("case").get<std::string>());
    r.model_kind = metrics::model_kind_from_name(j.at("kind").get<std::string>());
    r.dataset_role = j.at("role").get<std::string>();
    r.mode = j.at("mode").get<std::string>() == "one_step" ? metrics::EvalMode::kOneStep
                                                           : metrics::EvalMode::kSimulation;
    r.nrmse = j.at("nrmse").get<double>();
    out.push_back(r);
  }
  return out;
}

}  // namespace narxid::io

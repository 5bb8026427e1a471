// SPDX-License-Identifier: Apache-2.0
//
// File formats: CSV datasets with JSON sidecars, JSON model files (FIR models
// are a bare coefficient array, networks an object with an order header and
// the flat parameter vector), training reports, and metric records.

#ifndef NARXID_CORE_IO_HPP
#define NARXID_CORE_IO_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/datagen.hpp"
#include "core/fir.hpp"
#include "core/metrics.hpp"
#include "core/narx.hpp"
#include "core/training.hpp"

namespace narxid::io {

// A trained model of either family.
struct TrainedModel {
  std::optional<fir::FirModel> fir_model;
  std::optional<std::pair<narx::NarxConfig, narx::MlpParams>> net_model;

  bool is_fir() const { return fir_model.has_value(); }
};

// Shortest round-trip decimal representation of a double (%.17g).
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Dataset CSV (columns t,u,y,y0) plus a self-describing JSON sidecar.
void save_dataset(const std::filesystem::path& dir, const std::string& name,
                  const datagen::Dataset& ds, std::uint64_t seed, double sigma_v,
                  double band_fraction);
datagen::Dataset load_dataset(const std::filesystem::path& dir, const std::string& name);

void save_experiment(const datagen::Experiment& exp, const std::filesystem::path& dir);
datagen::Experiment load_experiment(const std::filesystem::path& dir);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

std::string report_to_json(const training::TrainReport& report);

std::string records_to_json(const std::vector<metrics::MetricRecord>& records);
std::string records_to_csv(const std::vector<metrics::MetricRecord>& records);
std::vector<metrics::MetricRecord> records_from_json(const std::string& text);

}  // namespace narxid::io

#endif  // NARXID_CORE_IO_HPP

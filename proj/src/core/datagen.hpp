// SPDX-License-Identifier: Apache-2.0
//
// Benchmark data generation: multisine excitation, the two LTI blocks with a
// static tanh nonlinearity between them, output noise, and dataset splits.
// Sample rate is normalized to f_s = 1.

#ifndef NARXID_CORE_DATAGEN_HPP
#define NARXID_CORE_DATAGEN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace narxid::datagen {

using Signal = std::vector<double>;

enum class DatasetRole { kTrain, kValidation, kWhiteTest, kColoredTest };

std::string role_name(DatasetRole role);
DatasetRole role_from_name(const std::string& name);

struct Dataset {
  Signal u;
  Signal y;   // noisy for train/validation, equal to y0 for the test sets
  Signal y0;  // noiseless output
  DatasetRole role = DatasetRole::kTrain;
};

// Discrete-time IIR block b(q)/a(q) with a_0 = 1. Stability (all pole moduli
// strictly inside the unit circle) is checked numerically at construction.
struct LtiBlock {
  std::vector<double> b;
  std::vector<double> a;

  LtiBlock(std::vector<double> numerator, std::vector<double> denominator);

  // Largest pole modulus.
  double spectral_radius() const;
  // Static gain b(1)/a(1).
  double dc_gain() const;
};

// The two benchmark blocks.
const LtiBlock& wh_block_1();
const LtiBlock& wh_block_2();

// y(t) = sum_i b_i u(t-i) - sum_{j>=1} a_j y(t-j), zero initial conditions.
Signal lti_filter(const LtiBlock& block, std::span<const double> u);

// First n_taps samples of the block's impulse response.
Signal impulse_response(const LtiBlock& block, int n_taps);

// Zero-mean multisine with unit sample variance: equal-amplitude cosines at
// bins 1..K with i.i.d. uniform random phases, K = floor(band_fraction * n)
// capped below the Nyquist bin so the excited spectrum is exactly flat.
Signal multisine(int n, double band_fraction, std::uint64_t seed);

// Noiseless benchmark output: block 1 -> tanh -> block 2.
Signal wh_simulate(std::span<const double> u);

struct ExperimentConfig {
  int n_train_record = 1024;  // split 80/20 into train/validation
  int n_test = 10000;
  double sigma_v = 0.01;           // output noise standard deviation
  double train_band_fraction = 0.5;
  double white_band_fraction = 0.5;
  double colored_band_fraction = 0.1;
};

struct Experiment {
  Dataset train;
  Dataset validation;
  Dataset white_test;
  Dataset colored_test;
  std::uint64_t seed = 0;
  ExperimentConfig config;
};

// All randomness (phases, noise) is drawn from independent streams derived
// from the seed; identical seeds give bit-identical datasets. The training
// record is split contiguously.
Experiment generate_experiment(std::uint64_t seed, const ExperimentConfig& cfg = {});

}  // namespace narxid::datagen

#endif  // NARXID_CORE_DATAGEN_HPP

// SPDX-License-Identifier: Apache-2.0
#ifndef NARXID_CORE_COMMON_HPP
#define NARXID_CORE_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace narxid {

// Error taxonomy. The C API and the CLI map these onto status/exit codes:
// UsageError -> 1, DataError -> 2, NumericError -> 3.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw UsageError("linspace: need at least one point");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return out;
}

// Logarithmically spaced grid between lo and hi (both > 0, inclusive).
inline std::vector<double> logspace(double lo, double hi, int n) {
  if (lo <= 0.0 || hi <= 0.0) throw UsageError("logspace: bounds must be positive");
  std::vector<double> out = linspace(std::log(lo), std::log(hi), n);
  for (double& v : out) v = std::exp(v);
  return out;
}

// SplitMix64 step; used both as a standalone generator for seed derivation
// and to decorrelate user-provided seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, tag). Stable across builds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0xA24BAED4963EE407ULL + tag * 0x9552FCF2A9441521ULL);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2) {
  return derive_seed(derive_seed(seed, tag1), tag2);
}

// Deterministic uniform/Gaussian generator. The standard library engines have
// a pinned sequence but the distributions do not, so the mappings are done by
// hand to keep results identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x853C49E6748FEA9BULL) {
    // A few warm-up steps so nearby seeds do not produce nearby first draws.
    for (int i = 0; i < 4; ++i) (void)splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Marsaglia's polar method (rejection is deterministic
  // given the stream).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace narxid

#endif  // NARXID_CORE_COMMON_HPP

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trafficmon {

// Deterministic RNG with named sub-streams. All draw primitives are
// implemented here (not via std::*_distribution, whose output is
// implementation-defined), so a (seed, stream name) pair produces the
// same values on every platform and every run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Derive an independent stream from a master seed and a name, so adding
  // streams never perturbs existing ones.
  static Rng stream(std::uint64_t seed, std::string_view a, std::string_view b = {},
                    std::uint64_t index = 0);

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [lo, hi], inclusive, via rejection sampling.
  int uniform_int(int lo, int hi);

  bool bernoulli(double p) { return next_double() < p; }

  double exponential(double mean);

  int poisson(double mean);

 private:
  std::mt19937_64 gen_;
};

// FNV-1a over arbitrary bytes, used for stream-name hashing.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ull);

}  // namespace trafficmon

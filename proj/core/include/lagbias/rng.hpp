#pragma once
// Seeded random streams. Engine is std::mt19937_64 (fully specified by the
// standard); the uniform/normal/gamma transforms are implemented here so
// draws are identical across standard library implementations.

#include <cstdint>
#include <random>

namespace lagbias {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for stream `index` under parent `seed`. Distinct (seed, index) pairs
// give unrelated streams; used for per-chain and per-delta seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on the open interval (0, 1).
  double uniform_open();
  // Integer uniform on [lo, hi].
  int uniform_int(int lo, int hi);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Gamma with shape-rate parameterization (mean = shape / rate).
  double gamma(double shape, double rate);
  int binomial(int n, double p);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace lagbias

#pragma once

#include <cstdint>
#include <random>

namespace c14rate {

// Seeded random source used by every stochastic routine in the library.
// All draws funnel through one engine so that a (seed, call sequence) pair
// fully determines the output stream; reproducibility is per build (the
// standard distributions are implementation-defined, not portable bit-for-bit
// across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // in [0, 1)
  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  // in [a, b)
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(engine_);
  }

  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  // shape alpha, RATE beta (std::gamma_distribution takes a scale)
  double gamma(double alpha, double beta) {
    return std::gamma_distribution<double>(alpha, 1.0 / beta)(engine_);
  }

  long poisson(double mean) {
    return std::poisson_distribution<long>(mean)(engine_);
  }

  // index in [0, n)
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  // Seed for an independent stream derived from (seed, stream index); used
  // where results must depend only on the pair, e.g. bootstrap replicate r
  // or chain c.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finaliser over the combined key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_seed(seed, stream));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace c14rate

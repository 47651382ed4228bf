#pragma once

#include <cstdint>
#include <random>

namespace gencal {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for sub-stream `index` of stream `stream` under a master seed.
/// Results do not depend on how work is scheduled across threads.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index = 0) noexcept;

/// Random source used everywhere in the library.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform, normal and Poisson variates are produced by our own
/// transforms (std:: distributions are implementation-defined), so a seed
/// yields the same stream on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Poisson variate. Inversion for lambda < 10, PTRS rejection otherwise.
  /// Throws ValidationError unless lambda is positive and finite.
  std::uint64_t poisson(double lambda);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gencal

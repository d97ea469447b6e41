#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ttrnn {

/// Seedable generator used everywhere randomness enters the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions below are implemented here rather than taken
/// from <random>, because the standard leaves those algorithms unspecified:
///   uniform()  -> (top 53 bits + 0.5) * 2^-53, strictly inside (0, 1)
///   normal()   -> Box-Muller, both variates of each pair are used
///   below(n)   -> rejection sampling on the top bits, unbiased
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform();
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ttrnn

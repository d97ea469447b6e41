#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttrnn/tt_format.hpp"

namespace ttrnn {

enum class LayerFamily { Dense, TT };

struct BenchPoint {
  LayerFamily family = LayerFamily::TT;
  std::size_t rows = 0;  // M
  std::size_t cols = 0;  // N
  std::size_t order = 1;
  std::size_t max_rank = 1;
  std::size_t max_mode = 1;
  std::size_t batch = 1;
  double forward_seconds = 0.0;   // median
  double backward_seconds = 0.0;  // median
  std::uint64_t param_bytes = 0;
  std::uint64_t intermediate_bytes = 0;  // from the contraction plan
};

inline constexpr int kMinRepetitions = 20;
inline constexpr int kMinWarmup = 3;

struct SweepConfig {
  LayerFamily family = LayerFamily::TT;
  std::vector<std::size_t> sizes;  // M = N for each point
  std::size_t rank = 4;
  std::size_t mode = 4;   // target mode size; d follows from the size
  std::size_t order = 0;  // when non-zero, factor each size into exactly this many modes
  std::size_t batch = 8;
  int warmup = 3;
  int repetitions = 20;
  std::uint64_t seed = 1;
};

/// Mode factorization used for a sweep point. Throws ConfigError if `size`
/// cannot be factored as requested.
ModeDims sweep_modes(std::size_t size, std::size_t mode, std::size_t order);

std::vector<BenchPoint> run_scaling_sweep(const SweepConfig& config);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual in log space
};

/// Ordinary least squares of log(time) on log(size). Needs >= 3 points,
/// positive values and at least two distinct sizes.
SlopeFit fit_loglog_slope(const std::vector<double>& sizes, const std::vector<double>& times);
SlopeFit fit_forward_slope(const std::vector<BenchPoint>& points);

std::string family_name(LayerFamily family);
std::string format_bench_point(const BenchPoint& point);

}  // namespace ttrnn

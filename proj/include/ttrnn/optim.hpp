#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ttrnn/params.hpp"

namespace ttrnn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Moment accumulators for one ordered parameter list.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of `params` in place. Moments are allocated
/// on the first call. Throws NumericError naming the first parameter with a
/// non-finite gradient, before anything is modified.
void adam_step(AdamState& state, const ParamList& params, const ParamList& grads);

/// Scales all gradients by max_norm / g when their global L2 norm g exceeds
/// max_norm. Returns g.
double clip_global_norm(const ParamList& grads, double max_norm);

double global_norm(const ParamList& grads);

void write_adam(std::ostream& out, const AdamState& state);
AdamState read_adam(std::istream& in);

}  // namespace ttrnn

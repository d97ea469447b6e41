#include "ttrnn/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "ttrnn/binary_io.hpp"
#include "ttrnn/error.hpp"

namespace ttrnn {

void adam_step(AdamState& state, const ParamList& params, const ParamList& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("Adam got " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].values.size() != grads[i].values.size()) {
      throw ShapeError("gradient for '" + params[i].name + "' has the wrong size");
    }
    for (double g : grads[i].values) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + params[i].name + "'");
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.values.size(), 0.0);
      state.second_moment.emplace_back(p.values.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("Adam state was built for a different parameter list");
  }

  const AdamConfig& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != params[i].values.size()) {
      throw ShapeError("Adam moments for '" + params[i].name + "' have the wrong size");
    }
    const auto theta = params[i].values;
    const auto g = grads[i].values;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

double global_norm(const ParamList& grads) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.values) sq += v * v;
  return std::sqrt(sq);
}

double clip_global_norm(const ParamList& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw RangeError("max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& g : grads)
      for (double& v : g.values) v *= scale;
  }
  return norm;
}

void write_adam(std::ostream& out, const AdamState& state) {
  out.write("ADM1", 4);
  binio::write<double>(out, state.config.learning_rate);
  binio::write<double>(out, state.config.beta1);
  binio::write<double>(out, state.config.beta2);
  binio::write<double>(out, state.config.epsilon);
  binio::write<std::uint64_t>(out, state.step);
  binio::write_u32(out, state.first_moment.size());
  for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
    binio::write<std::uint64_t>(out, state.first_moment[i].size());
    binio::write_doubles(out, state.first_moment[i]);
    binio::write_doubles(out, state.second_moment[i]);
  }
}

AdamState read_adam(std::istream& in) {
  binio::expect_magic(in, "ADM1", "optimizer state");
  AdamConfig cfg;
  cfg.learning_rate = binio::read<double>(in, "learning rate");
  cfg.beta1 = binio::read<double>(in, "beta1");
  cfg.beta2 = binio::read<double>(in, "beta2");
  cfg.epsilon = binio::read<double>(in, "epsilon");
  AdamState state(cfg);
  state.step = binio::read<std::uint64_t>(in, "step");
  const auto count = binio::read<std::uint32_t>(in, "moment count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto n = binio::read<std::uint64_t>(in, "moment length");
    if (n > (std::uint64_t{1} << 32)) throw FormatError("implausible moment length");
    binio::require_bytes(in, 16 * n, "optimizer moments");
    std::vector<double> m(n), v(n);
    binio::read_doubles(in, m, "first moment");
    binio::read_doubles(in, v, "second moment");
    state.first_moment.push_back(std::move(m));
    state.second_moment.push_back(std::move(v));
  }
  return state;
}

}  // namespace ttrnn

#include "ttrnn/rng.hpp"

#include <cmath>
#include <numbers>

#include "ttrnn/error.hpp"

namespace ttrnn {

double Rng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw RangeError("Rng::below requires n > 0");
  const std::uint64_t bound = n;
  // Largest multiple of bound representable; draws above it are rejected.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw > limit);
  return static_cast<std::size_t>(draw % bound);
}

}  // namespace ttrnn

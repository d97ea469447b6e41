#include <cstdlib>
#include <iostream>
#include <string>

#include "ttrnn/error.hpp"
#include "ttrnn/kernels.hpp"

namespace ttrnn::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(TTRNN_HAVE_AVX2)
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(TTRNN_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa best_available() {
  if (available(Isa::Avx2)) return Isa::Avx2;
  if (available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Isa select() {
  const char* env = std::getenv("TTRNN_KERNELS");
  if (env == nullptr || *env == '\0') return best_available();
  const std::string want(env);
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (want == name(isa)) {
      if (available(isa)) return isa;
      std::cerr << "ttrnn: TTRNN_KERNELS=" << want << " is not available on this CPU\n";
      return best_available();
    }
  }
  std::cerr << "ttrnn: unknown TTRNN_KERNELS value '" << want << "'\n";
  return best_available();
}

}  // namespace

bool available(Isa isa) { return cpu_supports(isa); }

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) throw Error("kernel set '" + std::string(name(isa)) + "' is unavailable");
  switch (isa) {
#if defined(TTRNN_HAVE_AVX2)
    case Isa::Avx2:
      return detail::avx2_table();
#endif
#if defined(TTRNN_HAVE_NEON)
    case Isa::Neon:
      return detail::neon_table();
#endif
    default:
      return detail::scalar_table();
  }
}

const KernelTable& active() {
  static const KernelTable& chosen = table(select());
  return chosen;
}

}  // namespace ttrnn::kernels

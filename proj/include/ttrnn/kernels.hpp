#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop arithmetic for the dense and TT layers. Every routine has a
// portable scalar reference and, where the target allows, AVX2+FMA (x86-64)
// and NEON (AArch64) variants. The variant is chosen once per process from
// the CPU's reported features; TTRNN_KERNELS=scalar|avx2|neon overrides it.
//
// All matrices are row-major with an explicit leading dimension.
namespace ttrnn::kernels {

enum class Isa { Scalar, Avx2, Neon };

enum class Trans { No, Yes };

// C = beta * C + op(A) * op(B), with op(A) of shape m x k and op(B) k x n.
// beta == 0 overwrites C without reading it.
using GemmFn = void (*)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                        const double* a, std::size_t lda, const double* b, std::size_t ldb,
                        double beta, double* c, std::size_t ldc);
using DotFn = double (*)(const double* x, const double* y, std::size_t n);
// y += alpha * x
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);

struct KernelTable {
  Isa isa;
  GemmFn gemm;
  DotFn dot;
  AxpyFn axpy;
};

/// True when `isa` was compiled in and the running CPU supports it.
bool available(Isa isa);

/// Kernel table for a specific ISA. Throws ttrnn::Error if unavailable.
const KernelTable& table(Isa isa);

/// Table selected for this process.
const KernelTable& active();

std::string_view name(Isa isa);

inline void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double beta, double* c, std::size_t ldc) {
  active().gemm(ta, tb, m, n, k, a, lda, b, ldb, beta, c, ldc);
}

inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}

namespace detail {
const KernelTable& scalar_table();
#if defined(TTRNN_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(TTRNN_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace ttrnn::kernels

// AArch64 NEON kernels (two doubles per register). NEON is mandatory on
// AArch64, so no runtime probe is needed beyond the compile-time guard.
#include <arm_neon.h>

#include "ttrnn/kernels.hpp"

namespace ttrnn::kernels::detail {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) ci[j] = beta == 0.0 ? 0.0 : ci[j] * beta;
  }
  if (tb == Trans::No) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * ldc;
      for (std::size_t p = 0; p < k; ++p) {
        axpy(ta == Trans::No ? a[i * lda + p] : a[p * lda + i], b + p * ldb, ci, n);
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * ldb;
      double s = 0.0;
      if (ta == Trans::No) {
        s = dot(a + i * lda, bj, k);
      } else {
        for (std::size_t p = 0; p < k; ++p) s += a[p * lda + i] * bj[p];
      }
      ci[j] += s;
    }
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{Isa::Neon, &gemm, &dot, &axpy};
  return table;
}

}  // namespace ttrnn::kernels::detail

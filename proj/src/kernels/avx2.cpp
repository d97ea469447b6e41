// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only called after the
// dispatcher has confirmed CPU support.
#include <immintrin.h>

#include "ttrnn/kernels.hpp"

namespace ttrnn::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// c[0..n) += a0*b0 + a1*b1 + a2*b2 + a3*b3, touching c once.
void axpy4(const double* coef, const double* b0, const double* b1, const double* b2,
           const double* b3, double* c, std::size_t n) {
  const __m256d v0 = _mm256_set1_pd(coef[0]);
  const __m256d v1 = _mm256_set1_pd(coef[1]);
  const __m256d v2 = _mm256_set1_pd(coef[2]);
  const __m256d v3 = _mm256_set1_pd(coef[3]);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_loadu_pd(c + j);
    acc = _mm256_fmadd_pd(v0, _mm256_loadu_pd(b0 + j), acc);
    acc = _mm256_fmadd_pd(v1, _mm256_loadu_pd(b1 + j), acc);
    acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(b2 + j), acc);
    acc = _mm256_fmadd_pd(v3, _mm256_loadu_pd(b3 + j), acc);
    _mm256_storeu_pd(c + j, acc);
  }
  for (; j < n; ++j) {
    c[j] += coef[0] * b0[j] + coef[1] * b1[j] + coef[2] * b2[j] + coef[3] * b3[j];
  }
}

void scale(std::size_t m, std::size_t n, double beta, double* c, std::size_t ldc) {
  if (beta == 1.0) return;
  const __m256d vb = _mm256_set1_pd(beta);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    std::size_t j = 0;
    if (beta == 0.0) {
      for (; j + 4 <= n; j += 4) _mm256_storeu_pd(ci + j, _mm256_setzero_pd());
      for (; j < n; ++j) ci[j] = 0.0;
    } else {
      for (; j + 4 <= n; j += 4) _mm256_storeu_pd(ci + j, _mm256_mul_pd(vb, _mm256_loadu_pd(ci + j)));
      for (; j < n; ++j) ci[j] *= beta;
    }
  }
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  scale(m, n, beta, c, ldc);
  if (tb == Trans::No) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * ldc;
      auto coef = [&](std::size_t p) { return ta == Trans::No ? a[i * lda + p] : a[p * lda + i]; };
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const double cf[4] = {coef(p), coef(p + 1), coef(p + 2), coef(p + 3)};
        axpy4(cf, b + p * ldb, b + (p + 1) * ldb, b + (p + 2) * ldb, b + (p + 3) * ldb, ci, n);
      }
      for (; p < k; ++p) axpy(coef(p), b + p * ldb, ci, n);
    }
    return;
  }
  if (ta == Trans::No) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a + i * lda;
      double* ci = c + i * ldc;
      for (std::size_t j = 0; j < n; ++j) ci[j] += dot(ai, b + j * ldb, k);
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * ldb;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[p * lda + i] * bj[p];
      ci[j] += s;
    }
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::Avx2, &gemm, &dot, &axpy};
  return table;
}

}  // namespace ttrnn::kernels::detail

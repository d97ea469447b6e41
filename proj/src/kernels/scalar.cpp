// Portable reference kernels. The SIMD variants must agree with these to
// rounding; tests/test_kernels.cpp holds them to that.
#include "ttrnn/kernels.hpp"

namespace ttrnn::kernels::detail {
namespace {

void scale(std::size_t m, std::size_t n, double beta, double* c, std::size_t ldc) {
  if (beta == 1.0) return;
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    if (beta == 0.0) {
      for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    } else {
      for (std::size_t j = 0; j < n; ++j) ci[j] *= beta;
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  scale(m, n, beta, c, ldc);
  if (tb == Trans::No) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * ldc;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ta == Trans::No ? a[i * lda + p] : a[p * lda + i];
        axpy(aip, b + p * ldb, ci, n);
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

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, &gemm, &dot, &axpy};
  return table;
}

}  // namespace ttrnn::kernels::detail

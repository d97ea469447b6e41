#pragma once

// Reference computations used only by tests. Nothing here calls into the
// library's contraction or kernel code, so agreement is evidence.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "ttrnn/matrix.hpp"
#include "ttrnn/rng.hpp"
#include "ttrnn/tt_format.hpp"

namespace oracle {

using ttrnn::Matrix;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, ttrnn::Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

// y = x W^T + b with a plain triple loop.
inline Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b = {}) {
  Matrix y(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t i = 0; i < w.rows(); ++i) {
      long double acc = b.empty() ? 0.0L : b[i];
      for (std::size_t j = 0; j < w.cols(); ++j) acc += static_cast<long double>(x(r, j)) * w(i, j);
      y(r, i) = static_cast<double>(acc);
    }
  return y;
}

// C = op(A) op(B) with explicit index arithmetic.
inline std::vector<double> gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
                                const std::vector<double>& a, std::size_t lda,
                                const std::vector<double>& b, std::size_t ldb) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta ? a[p * lda + i] : a[i * lda + p];
        const double bv = tb ? b[j * ldb + p] : b[p * ldb + j];
        acc += static_cast<long double>(av) * bv;
      }
      c[i * n + j] = static_cast<double>(acc);
    }
  return c;
}

// Dense reconstruction by summing over every rank path explicitly:
// W[(i_1..i_d),(j_1..j_d)] = sum over a_1..a_{d-1} of prod_k G_k(i_k, j_k, a_{k-1}, a_k).
inline Matrix enumerate_dense(const ttrnn::TTMatrix& tt) {
  const auto& spec = tt.spec;
  const std::size_t d = spec.order();
  const std::size_t rows = spec.rows();
  const std::size_t cols = spec.cols();
  Matrix w(rows, cols);
  std::vector<std::size_t> ri(d), ci(d), ai(d + 1, 0);
  for (std::size_t p = 0; p < rows; ++p) {
    std::size_t rest = p;
    for (std::size_t k = d; k-- > 0;) {
      ri[k] = rest % spec.row_modes()[k];
      rest /= spec.row_modes()[k];
    }
    for (std::size_t q = 0; q < cols; ++q) {
      rest = q;
      for (std::size_t k = d; k-- > 0;) {
        ci[k] = rest % spec.col_modes()[k];
        rest /= spec.col_modes()[k];
      }
      long double total = 0;
      std::function<void(std::size_t, long double)> walk = [&](std::size_t k, long double prod) {
        if (k == d) {
          total += prod;
          return;
        }
        const std::size_t rout = spec.ranks()[k + 1];
        for (std::size_t b = 0; b < rout; ++b) {
          ai[k + 1] = b;
          walk(k + 1, prod * tt.cores[k].at(ri[k], ci[k], ai[k], b));
        }
      };
      walk(0, 1.0L);
      w(p, q) = static_cast<double>(total);
    }
  }
  return w;
}

// Central difference of f with respect to values[i].
inline double central_diff(const std::function<double()>& f, std::span<double> values, std::size_t i,
                           double h = 1e-5) {
  const double saved = values[i];
  values[i] = saved + h;
  const double up = f();
  values[i] = saved - h;
  const double down = f();
  values[i] = saved;
  return (up - down) / (2 * h);
}

// Relative error with an absolute floor so entries whose true derivative is
// zero are judged on the scale of the finite-difference rounding noise.
inline double rel_err(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double frobenius_dot(const Matrix& a, const Matrix& b) {
  long double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<long double>(a.data()[i]) * b.data()[i];
  return static_cast<double>(acc);
}

}  // namespace oracle

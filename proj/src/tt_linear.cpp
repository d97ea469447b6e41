#include "ttrnn/tt_linear.hpp"

#include <algorithm>

#include "ttrnn/error.hpp"
#include "ttrnn/kernels.hpp"

namespace ttrnn {

using kernels::Trans;

LinearMap::LinearMap(DenseMatrix dense) : impl_(std::move(dense)) {
  const auto& d = std::get<DenseMatrix>(impl_);
  if (d.bias && d.bias->size() != d.weight.rows()) throw ShapeError("dense bias length differs from M");
}

LinearMap::LinearMap(TTMatrix tt) : impl_(std::move(tt)) { std::get<TTMatrix>(impl_).validate(); }

std::size_t LinearMap::in_dim() const {
  return is_tt() ? tt().cols() : dense().weight.cols();
}

std::size_t LinearMap::out_dim() const {
  return is_tt() ? tt().rows() : dense().weight.rows();
}

const std::optional<std::vector<double>>& LinearMap::bias() const {
  return is_tt() ? tt().bias : dense().bias;
}

std::optional<std::vector<double>>& LinearMap::bias() { return is_tt() ? tt().bias : dense().bias; }

bool LinearMap::has_bias() const { return bias().has_value(); }

std::uint64_t LinearMap::param_count() const {
  if (is_tt()) return tt_param_count(tt().spec, has_bias());
  return std::uint64_t{dense().weight.size()} + (has_bias() ? out_dim() : 0);
}

LinearMap LinearMap::zeros_like() const {
  if (is_tt()) return LinearMap(TTMatrix::zeros(tt().spec, has_bias()));
  DenseMatrix z{Matrix(out_dim(), in_dim()), std::nullopt};
  if (has_bias()) z.bias.emplace(out_dim(), 0.0);
  return LinearMap(std::move(z));
}

ParamList LinearMap::parameters() {
  if (is_tt()) return tt().parameters();
  ParamList out{{"weight", dense().weight.values()}};
  if (dense().bias) out.push_back({"bias", *dense().bias});
  return out;
}

namespace {

void check_input(const LinearMap& map, const Matrix& x) {
  if (x.cols() != map.in_dim()) {
    throw ShapeError("linear map expects inputs of width " + std::to_string(map.in_dim()) +
                     ", got " + std::to_string(x.cols()));
  }
  if (x.rows() == 0) throw ShapeError("linear map needs a batch of at least one row");
}

// Contraction plan for core k on a batch. The stage entering core k is laid
// out as [outer][rank_in * n_k][inner] where outer = batch * m_1..m_{k-1} and
// inner = n_{k+1}..n_d. Core k maps it to [outer][m_k * rank_out][inner].
struct StagePlan {
  std::size_t outer;
  std::size_t contract;  // rank_in * n_k
  std::size_t produce;   // m_k * rank_out
  std::size_t inner;
};

std::vector<StagePlan> plan(const TTSpec& spec, std::size_t batch) {
  const std::size_t d = spec.order();
  std::vector<StagePlan> out(d);
  std::size_t outer = batch;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t inner = 1;
    for (std::size_t l = k + 1; l < d; ++l) inner *= spec.col_modes()[l];
    out[k] = {outer, spec.rank(k) * spec.col_modes()[k], spec.row_modes()[k] * spec.rank(k + 1), inner};
    outer *= spec.row_modes()[k];
  }
  return out;
}

// Core k as a (m_k * rank_out) x (rank_in * n_k) matrix.
std::vector<double> core_as_matrix(const TTCore& core) {
  const std::size_t cols = core.rank_in() * core.cols();
  std::vector<double> g(core.rows() * core.rank_out() * cols);
  for (std::size_t i = 0; i < core.rows(); ++i)
    for (std::size_t j = 0; j < core.cols(); ++j)
      for (std::size_t a = 0; a < core.rank_in(); ++a)
        for (std::size_t b = 0; b < core.rank_out(); ++b)
          g[(i * core.rank_out() + b) * cols + a * core.cols() + j] = core.at(i, j, a, b);
  return g;
}

void add_matrix_to_core(const std::vector<double>& g, TTCore& core) {
  const std::size_t cols = core.rank_in() * core.cols();
  for (std::size_t i = 0; i < core.rows(); ++i)
    for (std::size_t j = 0; j < core.cols(); ++j)
      for (std::size_t a = 0; a < core.rank_in(); ++a)
        for (std::size_t b = 0; b < core.rank_out(); ++b)
          core.at(i, j, a, b) += g[(i * core.rank_out() + b) * cols + a * core.cols() + j];
}

// Below this inner extent a per-slice gemm is mostly call overhead, so the
// stage is permuted to [outer][inner][*] and contracted with a single gemm.
constexpr std::size_t kSliceMinInner = 16;

// [outer][a][b] -> [outer][b][a]
void swap_last_two(const double* src, double* dst, std::size_t outer, std::size_t a, std::size_t b) {
  for (std::size_t p = 0; p < outer; ++p) {
    const double* s = src + p * a * b;
    double* t = dst + p * a * b;
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < b; ++j) t[j * a + i] = s[i * b + j];
  }
}

// out[p] = G * in[p] for every outer slice p.
void apply_core(const StagePlan& s, const std::vector<double>& g, const double* in, double* out) {
  if (s.inner == 1) {
    kernels::gemm(Trans::No, Trans::Yes, s.outer, s.produce, s.contract, in, s.contract, g.data(),
                  s.contract, 0.0, out, s.produce);
    return;
  }
  if (s.inner < kSliceMinInner) {
    std::vector<double> in_t(s.outer * s.inner * s.contract), out_t(s.outer * s.inner * s.produce);
    swap_last_two(in, in_t.data(), s.outer, s.contract, s.inner);
    kernels::gemm(Trans::No, Trans::Yes, s.outer * s.inner, s.produce, s.contract, in_t.data(), s.contract,
                  g.data(), s.contract, 0.0, out_t.data(), s.produce);
    swap_last_two(out_t.data(), out, s.outer, s.inner, s.produce);
    return;
  }
  const std::size_t in_stride = s.contract * s.inner;
  const std::size_t out_stride = s.produce * s.inner;
  for (std::size_t p = 0; p < s.outer; ++p) {
    kernels::gemm(Trans::No, Trans::No, s.produce, s.inner, s.contract, g.data(), s.contract,
                  in + p * in_stride, s.inner, 0.0, out + p * out_stride, s.inner);
  }
}

void add_bias(Matrix& y, const std::vector<double>& bias) {
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double* row = y.data() + r * y.cols();
    for (std::size_t c = 0; c < y.cols(); ++c) row[c] += bias[c];
  }
}

Matrix tt_forward(const TTMatrix& tt, const Matrix& x, LinearCache* cache) {
  const std::size_t batch = x.rows();
  const auto stages = plan(tt.spec, batch);
  const std::size_t d = stages.size();
  std::vector<double> current(x.values().begin(), x.values().end());
  if (cache) cache->stages.clear();
  for (std::size_t k = 0; k < d; ++k) {
    const StagePlan& s = stages[k];
    std::vector<double> next(s.outer * s.produce * s.inner);
    apply_core(s, core_as_matrix(tt.cores[k]), current.data(), next.data());
    if (cache && k + 1 < d) cache->stages.push_back(next);
    current = std::move(next);
  }
  Matrix y(batch, tt.rows(), std::move(current));
  if (tt.bias) add_bias(y, *tt.bias);
  return y;
}

Matrix dense_forward(const DenseMatrix& dense, const Matrix& x) {
  Matrix y(x.rows(), dense.weight.rows());
  kernels::gemm(Trans::No, Trans::Yes, x.rows(), dense.weight.rows(), x.cols(), x.data(), x.cols(),
                dense.weight.data(), dense.weight.cols(), 0.0, y.data(), y.cols());
  if (dense.bias) add_bias(y, *dense.bias);
  return y;
}

void accumulate_bias(const Matrix& grad_out, std::vector<double>& bias_grad) {
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    const double* row = grad_out.data() + r * grad_out.cols();
    for (std::size_t c = 0; c < grad_out.cols(); ++c) bias_grad[c] += row[c];
  }
}

void tt_backward(const TTMatrix& tt, const LinearCache& cache, const Matrix& grad_out,
                 TTMatrix& grad, Matrix* grad_input) {
  const std::size_t batch = cache.input.rows();
  const auto stages = plan(tt.spec, batch);
  const std::size_t d = stages.size();
  if (cache.stages.size() + 1 != d) throw StateError("TT cache does not match the map's order");
  if (tt.bias) accumulate_bias(grad_out, *grad.bias);

  std::vector<double> upstream(grad_out.values().begin(), grad_out.values().end());
  for (std::size_t k = d; k-- > 0;) {
    const StagePlan& s = stages[k];
    const double* in = k == 0 ? cache.input.data() : cache.stages[k - 1].data();
    const std::vector<double> g = core_as_matrix(tt.cores[k]);
    std::vector<double> dg(g.size(), 0.0);
    const bool need_input = k > 0 || grad_input != nullptr;
    std::vector<double> down(need_input ? s.outer * s.contract * s.inner : 0);
    if (s.inner == 1) {
      kernels::gemm(Trans::Yes, Trans::No, s.produce, s.contract, s.outer, upstream.data(),
                    s.produce, in, s.contract, 1.0, dg.data(), s.contract);
      if (need_input) {
        kernels::gemm(Trans::No, Trans::No, s.outer, s.contract, s.produce, upstream.data(),
                      s.produce, g.data(), s.contract, 0.0, down.data(), s.contract);
      }
    } else if (s.inner < kSliceMinInner) {
      const std::size_t rows = s.outer * s.inner;
      std::vector<double> up_t(rows * s.produce), in_t(rows * s.contract);
      swap_last_two(upstream.data(), up_t.data(), s.outer, s.produce, s.inner);
      swap_last_two(in, in_t.data(), s.outer, s.contract, s.inner);
      kernels::gemm(Trans::Yes, Trans::No, s.produce, s.contract, rows, up_t.data(), s.produce, in_t.data(),
                    s.contract, 1.0, dg.data(), s.contract);
      if (need_input) {
        kernels::gemm(Trans::No, Trans::No, rows, s.contract, s.produce, up_t.data(), s.produce, g.data(),
                      s.contract, 0.0, in_t.data(), s.contract);
        swap_last_two(in_t.data(), down.data(), s.outer, s.inner, s.contract);
      }
    } else {
      const std::size_t in_stride = s.contract * s.inner;
      const std::size_t out_stride = s.produce * s.inner;
      for (std::size_t p = 0; p < s.outer; ++p) {
        const double* up = upstream.data() + p * out_stride;
        kernels::gemm(Trans::No, Trans::Yes, s.produce, s.contract, s.inner, up, s.inner,
                      in + p * in_stride, s.inner, 1.0, dg.data(), s.contract);
        if (need_input) {
          kernels::gemm(Trans::Yes, Trans::No, s.contract, s.inner, s.produce, g.data(), s.contract,
                        up, s.inner, 0.0, down.data() + p * in_stride, s.inner);
        }
      }
    }
    add_matrix_to_core(dg, grad.cores[k]);
    upstream = std::move(down);
  }
  if (grad_input) *grad_input = Matrix(batch, tt.cols(), std::move(upstream));
}

void dense_backward(const DenseMatrix& dense, const Matrix& x, const Matrix& grad_out,
                    DenseMatrix& grad, Matrix* grad_input) {
  const std::size_t m = dense.weight.rows();
  const std::size_t n = dense.weight.cols();
  kernels::gemm(Trans::Yes, Trans::No, m, n, x.rows(), grad_out.data(), m, x.data(), n, 1.0,
                grad.weight.data(), n);
  if (dense.bias) accumulate_bias(grad_out, *grad.bias);
  if (grad_input) {
    Matrix dx(x.rows(), n);
    kernels::gemm(Trans::No, Trans::No, x.rows(), n, m, grad_out.data(), m, dense.weight.data(), n,
                  0.0, dx.data(), n);
    *grad_input = std::move(dx);
  }
}

}  // namespace

Matrix forward(const LinearMap& map, const Matrix& x) {
  check_input(map, x);
  return map.is_tt() ? tt_forward(map.tt(), x, nullptr) : dense_forward(map.dense(), x);
}

Matrix forward(const LinearMap& map, const Matrix& x, LinearCache& cache) {
  check_input(map, x);
  cache.input = x;
  cache.stages.clear();
  cache.valid = true;
  return map.is_tt() ? tt_forward(map.tt(), x, &cache) : dense_forward(map.dense(), x);
}

void backward_accumulate(const LinearMap& map, const LinearCache& cache, const Matrix& grad_out,
                         LinearMap& grad, Matrix* grad_input) {
  if (!cache.valid) throw StateError("backward called without a forward cache");
  if (grad_out.rows() != cache.input.rows() || grad_out.cols() != map.out_dim()) {
    throw ShapeError("upstream gradient is " + std::to_string(grad_out.rows()) + "x" +
                     std::to_string(grad_out.cols()) + ", expected " +
                     std::to_string(cache.input.rows()) + "x" + std::to_string(map.out_dim()));
  }
  if (grad.is_tt() != map.is_tt() || grad.in_dim() != map.in_dim() ||
      grad.out_dim() != map.out_dim() || grad.has_bias() != map.has_bias()) {
    throw ShapeError("gradient accumulator is not shaped like the map");
  }
  if (map.is_tt()) {
    tt_backward(map.tt(), cache, grad_out, grad.tt(), grad_input);
  } else {
    dense_backward(map.dense(), cache.input, grad_out, grad.dense(), grad_input);
  }
}

LinearGrads backward(const LinearMap& map, const Matrix& x, const Matrix& grad_out) {
  LinearCache cache;
  forward(map, x, cache);
  LinearGrads grads{map.zeros_like(), Matrix()};
  backward_accumulate(map, cache, grad_out, grads.params, &grads.input);
  return grads;
}

DenseEquivalent dense_equivalent(const LinearMap& map, std::uint64_t cap) {
  DenseEquivalent out;
  if (map.is_tt()) {
    out.weight = tt_to_dense(map.tt(), cap);
  } else {
    const std::uint64_t entries = map.dense().weight.size();
    if (entries > cap) throw SizeError("dense matrix exceeds the entry cap");
    out.weight = map.dense().weight;
  }
  out.bias = map.has_bias() ? *map.bias() : std::vector<double>(map.out_dim(), 0.0);
  return out;
}

std::uint64_t tt_intermediate_count(const TTSpec& spec, std::size_t batch) {
  std::uint64_t total = 0;
  const auto stages = plan(spec, batch);
  for (std::size_t k = 0; k + 1 < stages.size(); ++k) {
    total += std::uint64_t{stages[k].outer} * stages[k].produce * stages[k].inner;
  }
  return total;
}

}  // namespace ttrnn

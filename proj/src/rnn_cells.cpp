#include "ttrnn/rnn_cells.hpp"

#include <cmath>

#include "ttrnn/error.hpp"
#include "ttrnn/rng.hpp"

namespace ttrnn {

CellTopology CellTopology::dense(CellKind kind, std::size_t input_dim, std::size_t hidden_dim) {
  CellTopology t;
  t.kind = kind;
  t.tt = false;
  t.input_dim = input_dim;
  t.hidden_dim = hidden_dim;
  return t;
}

CellTopology CellTopology::tensor_train(CellKind kind, ModeDims input_modes, ModeDims hidden_modes,
                                        std::size_t rank) {
  CellTopology t;
  t.kind = kind;
  t.tt = true;
  t.input_dim = static_cast<std::size_t>(input_modes.product());
  t.hidden_dim = static_cast<std::size_t>(hidden_modes.product());
  t.input_modes = std::move(input_modes);
  t.hidden_modes = std::move(hidden_modes);
  t.rank = rank;
  return t;
}

void CellTopology::validate() const {
  if (input_dim == 0 || hidden_dim == 0) throw ConfigError("cell dims must be positive");
  if (!tt) return;
  if (!input_modes || !hidden_modes) throw ConfigError("TT cell needs input_modes and hidden_modes");
  if (input_modes->order() != hidden_modes->order()) {
    throw ConfigError("input_modes and hidden_modes must have the same number of factors");
  }
  if (input_modes->product() != input_dim) {
    throw ConfigError("input_modes " + input_modes->to_string() + " do not multiply to " +
                      std::to_string(input_dim));
  }
  if (hidden_modes->product() != hidden_dim) {
    throw ConfigError("hidden_modes " + hidden_modes->to_string() + " do not multiply to " +
                      std::to_string(hidden_dim));
  }
  if (rank == 0) throw ConfigError("rank must be positive");
}

std::string CellTopology::name() const {
  const std::string base = kind == CellKind::SRNN ? (tt ? "SRNN" : "RNN") : "GRU";
  if (!tt) return base + "-H" + std::to_string(hidden_dim);
  return "TT-" + base + "-H" + hidden_modes->to_string() + "-R" + std::to_string(rank);
}

Cell::Cell(SRNNParams p) : impl_(std::move(p)) {
  const auto& s = srnn();
  const std::size_t m = s.w_xh.out_dim();
  if (s.w_hh.out_dim() != m || s.w_hh.in_dim() != m || s.b_h.size() != m) {
    throw ShapeError("SRNN maps and bias disagree on the hidden size");
  }
  if (s.w_xh.has_bias() || s.w_hh.has_bias()) throw ShapeError("SRNN maps must not carry biases");
}

Cell::Cell(GRUParams p) : impl_(std::move(p)) {
  const auto& g = gru();
  const std::size_t m = g.w_xh.out_dim();
  const std::size_t n = g.w_xh.in_dim();
  for (const LinearMap* x : {&g.w_xr, &g.w_xz, &g.w_xh}) {
    if (x->out_dim() != m || x->in_dim() != n) throw ShapeError("GRU input maps disagree in shape");
    if (x->has_bias()) throw ShapeError("GRU maps must not carry biases");
  }
  for (const LinearMap* h : {&g.w_hr, &g.w_hz, &g.w_hh}) {
    if (h->out_dim() != m || h->in_dim() != m) throw ShapeError("GRU hidden maps must be M x M");
    if (h->has_bias()) throw ShapeError("GRU maps must not carry biases");
  }
  if (g.b_r.size() != m || g.b_z.size() != m || g.b_h.size() != m) {
    throw ShapeError("GRU biases must have length M");
  }
}

CellKind Cell::kind() const {
  return std::holds_alternative<SRNNParams>(impl_) ? CellKind::SRNN : CellKind::GRU;
}

bool Cell::is_tt() const { return kind() == CellKind::SRNN ? srnn().w_xh.is_tt() : gru().w_xh.is_tt(); }

std::size_t Cell::input_dim() const {
  return kind() == CellKind::SRNN ? srnn().w_xh.in_dim() : gru().w_xh.in_dim();
}

std::size_t Cell::hidden_dim() const {
  return kind() == CellKind::SRNN ? srnn().w_xh.out_dim() : gru().w_xh.out_dim();
}

std::uint64_t Cell::param_count() const {
  if (kind() == CellKind::SRNN) {
    const auto& s = srnn();
    return s.w_xh.param_count() + s.w_hh.param_count() + s.b_h.size();
  }
  const auto& g = gru();
  return g.w_xr.param_count() + g.w_hr.param_count() + g.w_xz.param_count() +
         g.w_hz.param_count() + g.w_xh.param_count() + g.w_hh.param_count() + g.b_r.size() +
         g.b_z.size() + g.b_h.size();
}

Cell Cell::zeros_like() const {
  if (kind() == CellKind::SRNN) {
    const auto& s = srnn();
    return Cell(SRNNParams{s.w_xh.zeros_like(), s.w_hh.zeros_like(),
                           std::vector<double>(s.b_h.size(), 0.0)});
  }
  const auto& g = gru();
  const std::size_t m = g.b_h.size();
  return Cell(GRUParams{g.w_xr.zeros_like(), g.w_hr.zeros_like(), g.w_xz.zeros_like(),
                        g.w_hz.zeros_like(), g.w_xh.zeros_like(), g.w_hh.zeros_like(),
                        std::vector<double>(m, 0.0), std::vector<double>(m, 0.0),
                        std::vector<double>(m, 0.0)});
}

ParamList Cell::parameters() {
  ParamList out;
  if (kind() == CellKind::SRNN) {
    auto& s = srnn();
    append_prefixed(out, "w_xh.", s.w_xh.parameters());
    append_prefixed(out, "w_hh.", s.w_hh.parameters());
    out.push_back({"b_h", s.b_h});
    return out;
  }
  auto& g = gru();
  append_prefixed(out, "w_xr.", g.w_xr.parameters());
  append_prefixed(out, "w_hr.", g.w_hr.parameters());
  append_prefixed(out, "w_xz.", g.w_xz.parameters());
  append_prefixed(out, "w_hz.", g.w_hz.parameters());
  append_prefixed(out, "w_xh.", g.w_xh.parameters());
  append_prefixed(out, "w_hh.", g.w_hh.parameters());
  out.push_back({"b_r", g.b_r});
  out.push_back({"b_z", g.b_z});
  out.push_back({"b_h", g.b_h});
  return out;
}

namespace {

LinearMap densify(const LinearMap& map) {
  DenseEquivalent eq = dense_equivalent(map);
  std::optional<std::vector<double>> bias;
  if (map.has_bias()) bias = std::move(eq.bias);
  return LinearMap(DenseMatrix{std::move(eq.weight), std::move(bias)});
}

LinearMap init_map(const CellTopology& t, bool hidden_side, Rng& seeds) {
  const std::uint64_t seed = seeds.next_u64();
  if (t.tt) {
    const ModeDims& cols = hidden_side ? *t.hidden_modes : *t.input_modes;
    return LinearMap(glorot_init(TTSpec::uniform(*t.hidden_modes, cols, t.rank), seed, false));
  }
  const std::size_t n = hidden_side ? t.hidden_dim : t.input_dim;
  const std::size_t m = t.hidden_dim;
  Matrix w(m, n);
  Rng rng(seed);
  const double sigma = glorot_stddev(m, n, 1, 1);
  for (double& v : w.values()) v = sigma * rng.normal();
  return LinearMap(DenseMatrix{std::move(w), std::nullopt});
}

void check_step_inputs(std::size_t n, std::size_t m, const Matrix& x, const Matrix& h_prev) {
  if (x.cols() != n) {
    throw ShapeError("cell input width " + std::to_string(x.cols()) + ", expected " + std::to_string(n));
  }
  if (h_prev.cols() != m || h_prev.rows() != x.rows()) {
    throw ShapeError("hidden state is " + std::to_string(h_prev.rows()) + "x" +
                     std::to_string(h_prev.cols()) + ", expected " + std::to_string(x.rows()) +
                     "x" + std::to_string(m));
  }
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Matrix srnn_step_impl(const SRNNParams& p, const Matrix& x, const Matrix& h_prev, StepCache* cache) {
  check_step_inputs(p.w_xh.in_dim(), p.b_h.size(), x, h_prev);
  Matrix a;
  Matrix b;
  if (cache) {
    cache->maps.resize(2);
    a = forward(p.w_xh, x, cache->maps[0]);
    b = forward(p.w_hh, h_prev, cache->maps[1]);
  } else {
    a = forward(p.w_xh, x);
    b = forward(p.w_hh, h_prev);
  }
  const std::size_t m = p.b_h.size();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < m; ++c) a(r, c) = std::tanh(a(r, c) + b(r, c) + p.b_h[c]);
  }
  if (cache) {
    cache->h_prev = h_prev;
    cache->h_new = a;
  }
  return a;
}

Matrix gru_step_impl(const GRUParams& p, const Matrix& x, const Matrix& h_prev, StepCache* cache) {
  const std::size_t m = p.b_h.size();
  check_step_inputs(p.w_xh.in_dim(), m, x, h_prev);
  const std::size_t rows = x.rows();
  auto run = [&](const LinearMap& map, const Matrix& in, std::size_t slot) {
    return cache ? forward(map, in, cache->maps[slot]) : forward(map, in);
  };
  if (cache) cache->maps.resize(6);

  Matrix r = run(p.w_xr, x, 0);
  Matrix hr = run(p.w_hr, h_prev, 1);
  Matrix z = run(p.w_xz, x, 2);
  Matrix hz = run(p.w_hz, h_prev, 3);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < m; ++c) {
      r(i, c) = sigmoid(r(i, c) + hr(i, c) + p.b_r[c]);
      z(i, c) = sigmoid(z(i, c) + hz(i, c) + p.b_z[c]);
    }
  }
  Matrix gated(rows, m);
  for (std::size_t i = 0; i < gated.size(); ++i) gated.data()[i] = r.data()[i] * h_prev.data()[i];
  Matrix cand = run(p.w_xh, x, 4);
  Matrix hh = run(p.w_hh, gated, 5);
  Matrix h(rows, m);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < m; ++c) {
      cand(i, c) = std::tanh(cand(i, c) + hh(i, c) + p.b_h[c]);
      h(i, c) = (1.0 - z(i, c)) * h_prev(i, c) + z(i, c) * cand(i, c);
    }
  }
  if (cache) {
    cache->h_prev = h_prev;
    cache->h_new = h;
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->candidate = std::move(cand);
  }
  return h;
}

Matrix step_impl(const Cell& cell, const Matrix& x, const Matrix& h_prev, StepCache* cache) {
  return cell.kind() == CellKind::SRNN ? srnn_step_impl(cell.srnn(), x, h_prev, cache)
                                       : gru_step_impl(cell.gru(), x, h_prev, cache);
}

void add_colsum(const Matrix& g, std::vector<double>& out) {
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) out[c] += g(r, c);
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

// Returns dL/dh_prev for one step given dL/dh_new; parameter grads and dL/dx
// are accumulated into `grad` / `dx`.
Matrix srnn_step_backward(const SRNNParams& p, const StepCache& c, const Matrix& dh, SRNNParams& grad,
                          Matrix& dx) {
  Matrix da(dh.rows(), dh.cols());
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double h = c.h_new.data()[i];
    da.data()[i] = dh.data()[i] * (1.0 - h * h);
  }
  add_colsum(da, grad.b_h);
  Matrix dh_prev;
  backward_accumulate(p.w_xh, c.maps[0], da, grad.w_xh, &dx);
  backward_accumulate(p.w_hh, c.maps[1], da, grad.w_hh, &dh_prev);
  return dh_prev;
}

Matrix gru_step_backward(const GRUParams& p, const StepCache& c, const Matrix& dh, GRUParams& grad,
                         Matrix& dx) {
  const std::size_t rows = dh.rows();
  const std::size_t m = dh.cols();
  Matrix dh_prev(rows, m);
  Matrix da_h(rows, m);
  Matrix da_z(rows, m);
  for (std::size_t i = 0; i < rows * m; ++i) {
    const double z = c.z.data()[i];
    const double cand = c.candidate.data()[i];
    const double hp = c.h_prev.data()[i];
    const double g = dh.data()[i];
    dh_prev.data()[i] = g * (1.0 - z);
    da_h.data()[i] = g * z * (1.0 - cand * cand);
    da_z.data()[i] = g * (cand - hp) * z * (1.0 - z);
  }
  add_colsum(da_h, grad.b_h);
  add_colsum(da_z, grad.b_z);

  Matrix tmp;
  backward_accumulate(p.w_xh, c.maps[4], da_h, grad.w_xh, &dx);
  Matrix d_gated;
  backward_accumulate(p.w_hh, c.maps[5], da_h, grad.w_hh, &d_gated);
  Matrix da_r(rows, m);
  for (std::size_t i = 0; i < rows * m; ++i) {
    const double r = c.r.data()[i];
    const double hp = c.h_prev.data()[i];
    dh_prev.data()[i] += d_gated.data()[i] * r;
    da_r.data()[i] = d_gated.data()[i] * hp * r * (1.0 - r);
  }
  add_colsum(da_r, grad.b_r);

  backward_accumulate(p.w_xz, c.maps[2], da_z, grad.w_xz, &tmp);
  add_into(dx, tmp);
  backward_accumulate(p.w_hz, c.maps[3], da_z, grad.w_hz, &tmp);
  add_into(dh_prev, tmp);
  backward_accumulate(p.w_xr, c.maps[0], da_r, grad.w_xr, &tmp);
  add_into(dx, tmp);
  backward_accumulate(p.w_hr, c.maps[1], da_r, grad.w_hr, &tmp);
  add_into(dh_prev, tmp);
  return dh_prev;
}

}  // namespace

Cell Cell::densified() const {
  if (kind() == CellKind::SRNN) {
    const auto& s = srnn();
    return Cell(SRNNParams{densify(s.w_xh), densify(s.w_hh), s.b_h});
  }
  const auto& g = gru();
  return Cell(GRUParams{densify(g.w_xr), densify(g.w_hr), densify(g.w_xz), densify(g.w_hz),
                        densify(g.w_xh), densify(g.w_hh), g.b_r, g.b_z, g.b_h});
}

Cell init_cell(const CellTopology& topology, std::uint64_t seed) {
  topology.validate();
  Rng seeds(seed);
  const std::size_t m = topology.hidden_dim;
  if (topology.kind == CellKind::SRNN) {
    LinearMap xh = init_map(topology, false, seeds);
    LinearMap hh = init_map(topology, true, seeds);
    return Cell(SRNNParams{std::move(xh), std::move(hh), std::vector<double>(m, 0.0)});
  }
  LinearMap xr = init_map(topology, false, seeds);
  LinearMap hr = init_map(topology, true, seeds);
  LinearMap xz = init_map(topology, false, seeds);
  LinearMap hz = init_map(topology, true, seeds);
  LinearMap xh = init_map(topology, false, seeds);
  LinearMap hh = init_map(topology, true, seeds);
  return Cell(GRUParams{std::move(xr), std::move(hr), std::move(xz), std::move(hz), std::move(xh),
                        std::move(hh), std::vector<double>(m, 0.0), std::vector<double>(m, 0.0),
                        std::vector<double>(m, 0.0)});
}

Matrix srnn_step(const SRNNParams& params, const Matrix& x, const Matrix& h_prev) {
  return srnn_step_impl(params, x, h_prev, nullptr);
}

Matrix gru_step(const GRUParams& params, const Matrix& x, const Matrix& h_prev) {
  return gru_step_impl(params, x, h_prev, nullptr);
}

Matrix cell_step(const Cell& cell, const Matrix& x, const Matrix& h_prev) {
  return step_impl(cell, x, h_prev, nullptr);
}

UnrollResult unroll(const Cell& cell, const std::vector<Matrix>& sequence, const Matrix& h0,
                    const Matrix& mask, bool keep_cache) {
  if (sequence.empty()) throw ShapeError("cannot unroll an empty sequence");
  const std::size_t batch = sequence.front().rows();
  const std::size_t steps = sequence.size();
  const std::size_t m = cell.hidden_dim();
  Matrix h = h0.empty() ? Matrix(batch, m) : h0;
  if (h.rows() != batch || h.cols() != m) throw ShapeError("initial hidden state has the wrong shape");
  Matrix full_mask = mask.empty() ? Matrix(batch, steps, 1.0) : mask;
  if (full_mask.rows() != batch || full_mask.cols() != steps) {
    throw ShapeError("mask must be batch x T");
  }

  UnrollResult result;
  result.hidden.reserve(steps);
  if (keep_cache) {
    result.cache.steps.resize(steps);
    result.cache.mask = full_mask;
  }
  for (std::size_t t = 0; t < steps; ++t) {
    if (sequence[t].rows() != batch) throw ShapeError("every step must have the same batch size");
    StepCache* sc = keep_cache ? &result.cache.steps[t] : nullptr;
    Matrix next = step_impl(cell, sequence[t], h, sc);
    for (std::size_t r = 0; r < batch; ++r) {
      const double keep = full_mask(r, t);
      if (keep != 0.0 && keep != 1.0) throw DataError("mask entries must be 0 or 1");
      if (keep == 0.0) {
        for (std::size_t c = 0; c < m; ++c) next(r, c) = h(r, c);
      }
    }
    h = next;
    result.hidden.push_back(std::move(next));
  }
  return result;
}

CellGrads bptt(const Cell& cell, const UnrollCache& cache, const std::vector<Matrix>& grad_hidden) {
  const std::size_t steps = cache.steps.size();
  if (steps == 0 || cache.mask.empty()) throw StateError("bptt needs the cache of a prior unroll");
  if (grad_hidden.size() != steps) {
    throw ShapeError("expected " + std::to_string(steps) + " hidden-state gradients, got " +
                     std::to_string(grad_hidden.size()));
  }
  const std::size_t batch = cache.mask.rows();
  const std::size_t m = cell.hidden_dim();
  const std::size_t n = cell.input_dim();

  CellGrads out{cell.zeros_like(), std::vector<Matrix>(steps), Matrix()};
  Matrix carry(batch, m);  // dL/dh_t flowing back from later steps
  for (std::size_t t = steps; t-- > 0;) {
    const StepCache& sc = cache.steps[t];
    if (sc.maps.empty()) throw StateError("step cache missing; unroll with keep_cache");
    if (!grad_hidden[t].empty()) {
      if (grad_hidden[t].rows() != batch || grad_hidden[t].cols() != m) {
        throw ShapeError("hidden-state gradient has the wrong shape at step " + std::to_string(t));
      }
      add_into(carry, grad_hidden[t]);
    }
    // Masked rows pass their gradient straight to h_{t-1}.
    Matrix through(batch, m);
    Matrix into_step(batch, m);
    for (std::size_t r = 0; r < batch; ++r) {
      const double keep = cache.mask(r, t);
      for (std::size_t c = 0; c < m; ++c) {
        into_step(r, c) = keep * carry(r, c);
        through(r, c) = (1.0 - keep) * carry(r, c);
      }
    }
    Matrix dx(batch, n);
    Matrix dh_prev = cell.kind() == CellKind::SRNN
                         ? srnn_step_backward(cell.srnn(), sc, into_step, out.params.srnn(), dx)
                         : gru_step_backward(cell.gru(), sc, into_step, out.params.gru(), dx);
    add_into(dh_prev, through);
    out.inputs[t] = std::move(dx);
    carry = std::move(dh_prev);
  }
  out.h0 = std::move(carry);
  return out;
}

}  // namespace ttrnn

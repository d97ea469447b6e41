#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "ttrnn/error.hpp"
#include "ttrnn/rnn_cells.hpp"

using namespace ttrnn;

namespace {

CellTopology tt_topology(CellKind kind) {
  return CellTopology::tensor_train(kind, ModeDims({4, 4}), ModeDims({4, 4}), 3);
}

// Random cell with non-zero biases so every term of the step is exercised.
Cell random_cell(const CellTopology& t, std::uint64_t seed) {
  Cell c = init_cell(t, seed);
  Rng rng(seed ^ 0xabcdef);
  for (auto& p : c.parameters()) {
    if (p.name.rfind("b_", 0) == 0)
      for (double& v : p.values) v = 0.3 * rng.normal();
  }
  return c;
}

std::vector<Matrix> random_sequence(std::size_t steps, std::size_t batch, std::size_t n, Rng& rng) {
  std::vector<Matrix> seq;
  for (std::size_t t = 0; t < steps; ++t) seq.push_back(oracle::random_matrix(batch, n, rng));
  return seq;
}

double weighted_sum(const std::vector<Matrix>& hidden, const std::vector<Matrix>& weights) {
  double total = 0;
  for (std::size_t t = 0; t < hidden.size(); ++t) total += oracle::frobenius_dot(hidden[t], weights[t]);
  return total;
}

// Central differences of L = sum_t <W_t, h_t> against bptt for every
// parameter, every input entry and h0.
void check_bptt(Cell cell, std::size_t steps, std::uint64_t seed, bool with_mask) {
  Rng rng(seed);
  const std::size_t batch = 3;
  auto seq = random_sequence(steps, batch, cell.input_dim(), rng);
  Matrix h0 = oracle::random_matrix(batch, cell.hidden_dim(), rng, 0.5);
  Matrix mask;
  if (with_mask) {
    mask = Matrix(batch, steps, 1.0);
    for (std::size_t t = steps / 2 + 1; t < steps; ++t) mask(1, t) = 0.0;
    mask(2, steps - 1) = 0.0;
  }
  const auto weights = random_sequence(steps, batch, cell.hidden_dim(), rng);
  auto loss = [&] { return weighted_sum(unroll(cell, seq, h0, mask, false).hidden, weights); };

  const UnrollResult run = unroll(cell, seq, h0, mask, true);
  const CellGrads g = bptt(cell, run.cache, weights);
  Cell gp = g.params;
  auto params = cell.parameters();
  auto grads = gp.parameters();
  ASSERT_EQ(params.size(), grads.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    ASSERT_EQ(params[p].name, grads[p].name);
    for (std::size_t i = 0; i < params[p].values.size(); ++i) {
      const double fd = oracle::central_diff(loss, params[p].values, i);
      ASSERT_LE(oracle::rel_err(grads[p].values[i], fd), 1e-5)
          << params[p].name << "[" << i << "] analytic " << grads[p].values[i] << " fd " << fd;
    }
  }
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < seq[t].size(); ++i) {
      const double fd = oracle::central_diff(loss, seq[t].values(), i);
      ASSERT_LE(oracle::rel_err(g.inputs[t].data()[i], fd), 1e-5) << "x_" << t << "[" << i << "]";
    }
  for (std::size_t i = 0; i < h0.size(); ++i) {
    const double fd = oracle::central_diff(loss, h0.values(), i);
    ASSERT_LE(oracle::rel_err(g.h0.data()[i], fd), 1e-5) << "h0[" << i << "]";
  }
}

}  // namespace

TEST(Topology, NamesAndValidation) {
  EXPECT_EQ(tt_topology(CellKind::GRU).name(), "TT-GRU-H4x4-R3");
  EXPECT_EQ(CellTopology::dense(CellKind::SRNN, 32, 256).name(), "RNN-H256");
  EXPECT_EQ(CellTopology::dense(CellKind::GRU, 32, 512).name(), "GRU-H512");
  CellTopology bad = tt_topology(CellKind::SRNN);
  bad.input_dim = 15;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Cell, ShapesAndBiasCount) {
  const Cell gru = init_cell(tt_topology(CellKind::GRU), 1);
  EXPECT_EQ(gru.input_dim(), 16u);
  EXPECT_EQ(gru.hidden_dim(), 16u);
  EXPECT_FALSE(gru.gru().w_xr.has_bias());
  EXPECT_EQ(gru.gru().b_z.size(), 16u);
  const Cell srnn = init_cell(CellTopology::dense(CellKind::SRNN, 5, 7), 1);
  EXPECT_EQ(srnn.param_count(), 7u * 5 + 7u * 7 + 7);
}

TEST(SrnnStep, ZeroParamsGiveZero) {
  const Cell c = init_cell(CellTopology::dense(CellKind::SRNN, 3, 4), 1).zeros_like();
  Rng rng(1);
  const Matrix h = cell_step(c, oracle::random_matrix(2, 3, rng), oracle::random_matrix(2, 4, rng));
  for (double v : h.values()) EXPECT_EQ(v, 0.0);
}

TEST(SrnnStep, IdentityRecurrenceIsTanh) {
  Cell c = init_cell(CellTopology::dense(CellKind::SRNN, 4, 4), 1).zeros_like();
  auto& w = c.srnn().w_hh.dense().weight;
  for (std::size_t i = 0; i < 4; ++i) w(i, i) = 1.0;
  Rng rng(2);
  const Matrix hp = oracle::random_matrix(3, 4, rng);
  const Matrix h = cell_step(c, Matrix(3, 4), hp);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h.data()[i], std::tanh(hp.data()[i]));
}

TEST(SrnnStep, OutputBounded) {
  const Cell c = random_cell(tt_topology(CellKind::SRNN), 4);
  Rng rng(3);
  const Matrix h = cell_step(c, oracle::random_matrix(5, 16, rng, 10.0), oracle::random_matrix(5, 16, rng));
  for (double v : h.values()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_LE(std::abs(v), 1.0);
  }
}

TEST(GruStep, ZeroParamsHalveState) {
  const Cell c = init_cell(CellTopology::dense(CellKind::GRU, 3, 4), 1).zeros_like();
  Rng rng(1);
  const Matrix hp = oracle::random_matrix(2, 4, rng);
  const Matrix h = cell_step(c, oracle::random_matrix(2, 3, rng), hp);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h.data()[i], 0.5 * hp.data()[i]);
}

TEST(GruStep, ClosedUpdateGateKeepsState) {
  Cell c = random_cell(tt_topology(CellKind::GRU), 2);
  for (double& b : c.gru().b_z) b = -60.0;
  Rng rng(1);
  const Matrix hp = oracle::random_matrix(2, 16, rng, 0.1);
  const Matrix h = cell_step(c, oracle::random_matrix(2, 16, rng, 0.1), hp);
  EXPECT_LE(max_abs_diff(h, hp), 1e-20 + 1e-12);
}

TEST(GruStep, ConvexCombinationBounds) {
  const Cell c = random_cell(tt_topology(CellKind::GRU), 5);
  Rng rng(5);
  const auto seq = random_sequence(6, 4, 16, rng);
  const UnrollResult run = unroll(c, seq, oracle::random_matrix(4, 16, rng), Matrix());
  for (const StepCache& s : run.cache.steps)
    for (std::size_t i = 0; i < s.h_new.size(); ++i) {
      const double a = s.h_prev.data()[i], b = s.candidate.data()[i];
      EXPECT_LE(std::min(a, b), s.h_new.data()[i] + 1e-15);
      EXPECT_GE(std::max(a, b), s.h_new.data()[i] - 1e-15);
    }
}

TEST(Steps, ShapeErrors) {
  const Cell c = random_cell(tt_topology(CellKind::GRU), 5);
  EXPECT_THROW(cell_step(c, Matrix(2, 15), Matrix(2, 16)), ShapeError);
  EXPECT_THROW(cell_step(c, Matrix(2, 16), Matrix(3, 16)), ShapeError);
}

TEST(DenseEquivalence, TrajectoriesMatch) {
  for (auto kind : {CellKind::SRNN, CellKind::GRU}) {
    const Cell tt = random_cell(tt_topology(kind), 9);
    const Cell dense = tt.densified();
    EXPECT_FALSE(dense.is_tt());
    Rng rng(11);
    const auto seq = random_sequence(7, 5, 16, rng);
    const auto a = unroll(tt, seq, Matrix(), Matrix(), false).hidden;
    const auto b = unroll(dense, seq, Matrix(), Matrix(), false).hidden;
    for (std::size_t t = 0; t < a.size(); ++t) EXPECT_LE(max_abs_diff(a[t], b[t]), 1e-10);
  }
}

TEST(Unroll, MatchesManualSteps) {
  const Cell c = random_cell(tt_topology(CellKind::GRU), 3);
  Rng rng(12);
  const auto seq = random_sequence(3, 2, 16, rng);
  const Matrix h0 = oracle::random_matrix(2, 16, rng);
  const auto hs = unroll(c, seq, h0, Matrix()).hidden;
  Matrix h = h0;
  for (std::size_t t = 0; t < 3; ++t) {
    h = cell_step(c, seq[t], h);
    EXPECT_EQ(hs[t], h);
  }
  const auto one = unroll(c, {seq[0]}, Matrix(), Matrix()).hidden;
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], cell_step(c, seq[0], Matrix(2, 16)));
}

TEST(Unroll, Errors) {
  const Cell c = random_cell(tt_topology(CellKind::SRNN), 3);
  EXPECT_THROW(unroll(c, {}, Matrix(), Matrix()), ShapeError);
  Matrix mask(2, 1, 0.5);
  EXPECT_THROW(unroll(c, {Matrix(2, 16)}, Matrix(), mask), DataError);
  const UnrollResult noc = unroll(c, {Matrix(2, 16)}, Matrix(), Matrix(), false);
  EXPECT_THROW(bptt(c, noc.cache, {Matrix(2, 16)}), StateError);
  EXPECT_THROW(bptt(c, UnrollCache{}, {}), StateError);
}

TEST(Mask, CarryForwardAfterCutoff) {
  const Cell c = random_cell(tt_topology(CellKind::SRNN), 3);
  Rng rng(1);
  const auto seq = random_sequence(6, 2, 16, rng);
  Matrix mask(2, 6, 1.0);
  for (std::size_t t = 3; t < 6; ++t) mask(0, t) = 0.0;
  const auto hs = unroll(c, seq, Matrix(), mask).hidden;
  EXPECT_EQ(Matrix(1, 16, std::vector<double>(hs[5].row(0).begin(), hs[5].row(0).end())),
            Matrix(1, 16, std::vector<double>(hs[2].row(0).begin(), hs[2].row(0).end())));
  EXPECT_NE(hs[5](1, 0), hs[2](1, 0));
}

// Padding with masked steps leaves the final state and all gradients unchanged.
TEST(Mask, PaddingIsInvisible) {
  for (auto kind : {CellKind::SRNN, CellKind::GRU}) {
    const Cell c = random_cell(tt_topology(kind), 21);
    Rng rng(4);
    const auto seq = random_sequence(4, 2, 16, rng);
    auto padded = seq;
    padded.push_back(oracle::random_matrix(2, 16, rng, 5.0));
    padded.push_back(oracle::random_matrix(2, 16, rng, 5.0));
    Matrix mask(2, 6, 1.0);
    for (std::size_t r = 0; r < 2; ++r) mask(r, 4) = mask(r, 5) = 0.0;
    const Matrix w = oracle::random_matrix(2, 16, rng);

    const UnrollResult a = unroll(c, seq, Matrix(), Matrix());
    const UnrollResult b = unroll(c, padded, Matrix(), mask);
    EXPECT_EQ(a.hidden.back(), b.hidden.back());
    std::vector<Matrix> ga(4), gb(6);
    ga.back() = w;
    gb.back() = w;
    const CellGrads da = bptt(c, a.cache, ga);
    const CellGrads db = bptt(c, b.cache, gb);
    Cell pa = da.params, pb = db.params;
    auto va = pa.parameters(), vb = pb.parameters();
    for (std::size_t p = 0; p < va.size(); ++p)
      for (std::size_t i = 0; i < va[p].values.size(); ++i) EXPECT_NEAR(va[p].values[i], vb[p].values[i], 1e-14);
    for (std::size_t t = 0; t < 4; ++t) EXPECT_LE(max_abs_diff(da.inputs[t], db.inputs[t]), 1e-14);
    for (std::size_t t = 4; t < 6; ++t)
      for (double v : db.inputs[t].values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Bptt, ZeroUpstreamGivesZero) {
  const Cell c = random_cell(tt_topology(CellKind::GRU), 3);
  Rng rng(1);
  const auto run = unroll(c, random_sequence(3, 2, 16, rng), Matrix(), Matrix());
  CellGrads g = bptt(c, run.cache, {Matrix(), Matrix(), Matrix()});
  for (auto& p : g.params.parameters())
    for (double v : p.values) EXPECT_EQ(v, 0.0);
}

TEST(Bptt, SingleStepDenseIsOuterProductThroughTanh) {
  const Cell c = random_cell(CellTopology::dense(CellKind::SRNN, 3, 4), 8);
  Rng rng(2);
  const Matrix x = oracle::random_matrix(1, 3, rng);
  const Matrix h0 = oracle::random_matrix(1, 4, rng);
  const Matrix up = oracle::random_matrix(1, 4, rng);
  const auto run = unroll(c, {x}, h0, Matrix());
  const CellGrads g = bptt(c, run.cache, {up});
  const Matrix& h = run.hidden[0];
  for (std::size_t i = 0; i < 4; ++i) {
    const double delta = up(0, i) * (1 - h(0, i) * h(0, i));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g.params.srnn().w_xh.dense().weight(i, j), delta * x(0, j), 1e-15);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(g.params.srnn().w_hh.dense().weight(i, j), delta * h0(0, j), 1e-15);
    EXPECT_NEAR(g.params.srnn().b_h[i], delta, 1e-15);
  }
}

class BpttFiniteDifference
    : public ::testing::TestWithParam<std::tuple<CellKind, bool, std::size_t>> {};

TEST_P(BpttFiniteDifference, AllParametersInputsAndInitialState) {
  const auto [kind, tt, steps] = GetParam();
  const CellTopology t = tt ? tt_topology(kind) : CellTopology::dense(kind, 16, 16);
  check_bptt(random_cell(t, 100 + steps), steps, 7 * steps + (tt ? 1 : 0), steps > 1);
}

INSTANTIATE_TEST_SUITE_P(
    Cells, BpttFiniteDifference,
    ::testing::Combine(::testing::Values(CellKind::SRNN, CellKind::GRU), ::testing::Bool(),
                       ::testing::Values(std::size_t{1}, std::size_t{4}, std::size_t{9})),
    [](const auto& info) {
      return std::string(std::get<0>(info.param) == CellKind::SRNN ? "SRNN" : "GRU") +
             (std::get<1>(info.param) ? "_TT" : "_Dense") + "_T" + std::to_string(std::get<2>(info.param));
    });

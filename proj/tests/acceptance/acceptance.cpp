// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "ttrnn/app.hpp"
#include "ttrnn/bench.hpp"
#include "ttrnn/checkpoint.hpp"
#include "ttrnn/kernels.hpp"
#include "ttrnn/rnn_cells.hpp"
#include "ttrnn/tasks.hpp"
#include "ttrnn/tt_linear.hpp"

using namespace ttrnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ttrnn_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

CellTopology tt(CellKind kind, std::vector<std::size_t> in, std::vector<std::size_t> hidden, std::size_t r) {
  return CellTopology::tensor_train(kind, ModeDims(std::move(in)), ModeDims(std::move(hidden)), r);
}

Outcome exact_counts() {
  const auto start = Clock::now();
  Outcome out;
  std::vector<std::string> misses;
  auto expect_count = [&](const std::string& label, const CellTopology& t, std::uint64_t want) {
    const std::uint64_t got = count_cell_params(t);
    if (got != want) misses.push_back(label + "=" + std::to_string(got) + "!=" + std::to_string(want));
  };
  const auto gru256 = CellTopology::dense(CellKind::GRU, 32, 256);
  const auto gru512 = CellTopology::dense(CellKind::GRU, 256, 512);
  const auto rnn512 = CellTopology::dense(CellKind::SRNN, 256, 512);
  const auto gru_r3 = tt(CellKind::GRU, {4, 8}, {10, 10}, 3);
  const auto gru_r5 = tt(CellKind::GRU, {4, 8}, {10, 10}, 5);
  const auto gru_r7 = tt(CellKind::GRU, {4, 8}, {10, 10}, 7);
  const auto srnn_r5 = tt(CellKind::SRNN, {4, 8}, {10, 10}, 5);
  const auto piano_srnn_r3 = tt(CellKind::SRNN, {4, 4, 4, 4}, {8, 4, 8, 4}, 3);
  const auto piano_srnn_r5 = tt(CellKind::SRNN, {4, 4, 4, 4}, {8, 4, 8, 4}, 5);
  const auto piano_gru_r3 = tt(CellKind::GRU, {4, 4, 4, 4}, {8, 4, 8, 4}, 3);
  const auto piano_gru_r5 = tt(CellKind::GRU, {4, 4, 4, 4}, {8, 4, 8, 4}, 5);
  expect_count("GRU-H256", gru256, 221952);
  expect_count("TT-GRU-R3", gru_r3, 3180);
  expect_count("TT-GRU-R5", gru_r5, 5100);
  expect_count("TT-GRU-R7", gru_r7, 7020);
  expect_count("TT-SRNN-R5", srnn_r5, 1700);
  expect_count("RNN-H512", rnn512, 393728);
  expect_count("GRU-H512", gru512, 1181184);
  expect_count("TT-SRNN-8x4x8x4-R3", piano_srnn_r3, 2560);
  expect_count("TT-SRNN-8x4x8x4-R5", piano_srnn_r5, 4864);
  expect_count("TT-GRU-8x4x8x4-R3", piano_gru_r3, 7680);
  expect_count("TT-GRU-8x4x8x4-R5", piano_gru_r5, 14592);

  // Ratios are compared to the printed value within one unit of its last digit.
  auto expect_ratio = [&](const std::string& label, const CellTopology& m, const CellTopology& b, double shown,
                          int decimals) {
    const double got = make_report(m, b).compression_ratio;
    if (std::abs(got - shown) > std::pow(10.0, -decimals) + 1e-12)
      misses.push_back(label + " ratio " + fmt(got, 8) + " vs " + fmt(shown, 8));
  };
  // The SRNN ratio is printed against the 82176-parameter baseline, which is a
  // dense SRNN with a 64-wide input.
  const auto rnn256_64 = CellTopology::dense(CellKind::SRNN, 64, 256);
  expect_ratio("TT-GRU-R3", gru_r3, gru256, 69.8, 1);
  expect_ratio("TT-GRU-R5", gru_r5, gru256, 43.52, 2);
  expect_ratio("TT-GRU-R7", gru_r7, gru256, 31.61, 2);
  expect_ratio("TT-SRNN-R5", srnn_r5, rnn256_64, 48.34, 2);
  expect_ratio("TT-GRU-8x4x8x4-R3", piano_gru_r3, gru512, 153.80, 2);
  expect_ratio("TT-SRNN-8x4x8x4-R5", piano_srnn_r5, rnn512, 80.95, 2);

  // Documented exceptions: both published integers come from other input widths.
  if (count_cell_params(CellTopology::dense(CellKind::SRNN, 32, 256)) == 82176 ||
      count_cell_params(rnn256_64) != 82176)
    misses.push_back("82176 exception no longer holds");
  if (count_cell_params(tt(CellKind::SRNN, {4, 8}, {10, 10}, 3)) == 1030 ||
      count_cell_params(tt(CellKind::SRNN, {4, 7}, {10, 10}, 3)) != 1030)
    misses.push_back("1030 exception no longer holds");

  const double elapsed = seconds_since(start);
  if (elapsed >= 1.0) misses.push_back("runtime " + fmt(elapsed) + " s");
  out.pass = misses.empty();
  out.detail = "11 counts, 6 ratios, 2 exceptions";
  for (const auto& m : misses) out.detail += "; " + m;
  return out;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  Rng rng(20240);
  std::size_t specs = 0;
  double worst = 0.0;
  while (specs < 250) {
    const std::size_t d = 1 + rng.below(4);
    std::vector<std::size_t> rows(d), cols(d), ranks(d + 1, 1);
    std::uint64_t m = 1, n = 1;
    for (std::size_t k = 0; k < d; ++k) {
      rows[k] = 1 + rng.below(8);
      cols[k] = 1 + rng.below(8);
      m *= rows[k];
      n *= cols[k];
    }
    if (m * n > 4096) continue;
    for (std::size_t k = 1; k < d; ++k) ranks[k] = 1 + rng.below(5);
    TTMatrix w = glorot_init(TTSpec(ModeDims(rows), ModeDims(cols), ranks), rng.next_u64(), true);
    for (double& b : *w.bias) b = rng.normal();
    const Matrix x = oracle::random_matrix(3, n, rng);
    const Matrix got = forward(LinearMap(w), x);
    const Matrix want = oracle::affine(x, oracle::enumerate_dense(w), *w.bias);
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got.data()[i] - want.data()[i]));
    ++specs;
  }
  return {worst <= 1e-10, std::to_string(specs) + " specs, max abs error " + fmt(worst)};
}

// ---------------------------------------------------------------------------

double worst_rel = 0.0;

void fd_check(const std::function<double()>& loss, std::span<double> values, std::span<const double> analytic) {
  for (std::size_t i = 0; i < values.size(); ++i)
    worst_rel = std::max(worst_rel, oracle::rel_err(analytic[i], oracle::central_diff(loss, values, i, 1e-5)));
}

void fd_linear() {
  Rng rng(5);
  TTMatrix w = glorot_init(TTSpec::uniform(ModeDims({4, 4}), ModeDims({4, 4}), 3), 9, true);
  for (double& b : *w.bias) b = rng.normal();
  LinearMap map(w);
  Matrix x = oracle::random_matrix(4, 16, rng);
  const Matrix up = oracle::random_matrix(4, 16, rng);
  auto loss = [&] { return oracle::frobenius_dot(forward(map, x), up); };
  LinearGrads g = backward(map, x, up);
  auto params = map.parameters();
  auto grads = g.params.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) fd_check(loss, params[p].values, grads[p].values);
  fd_check(loss, x.values(), g.input.values());
}

void fd_cell(CellKind kind, std::size_t steps) {
  Rng rng(31 + steps);
  Cell cell = init_cell(tt(kind, {4, 4}, {4, 4}, 3), 77 + steps);
  for (auto& p : cell.parameters())
    if (p.name.rfind("b_", 0) == 0)
      for (double& v : p.values) v = 0.3 * rng.normal();
  std::vector<Matrix> seq, weights;
  for (std::size_t t = 0; t < steps; ++t) {
    seq.push_back(oracle::random_matrix(3, 16, rng));
    weights.push_back(oracle::random_matrix(3, 16, rng));
  }
  Matrix h0 = oracle::random_matrix(3, 16, rng, 0.5);
  auto loss = [&] {
    const auto hidden = unroll(cell, seq, h0, Matrix(), false).hidden;
    double total = 0;
    for (std::size_t t = 0; t < steps; ++t) total += oracle::frobenius_dot(hidden[t], weights[t]);
    return total;
  };
  const UnrollResult run = unroll(cell, seq, h0, Matrix(), true);
  CellGrads g = bptt(cell, run.cache, weights);
  auto params = cell.parameters();
  auto grads = g.params.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) fd_check(loss, params[p].values, grads[p].values);
  for (std::size_t t = 0; t < steps; ++t) fd_check(loss, seq[t].values(), g.inputs[t].values());
  fd_check(loss, h0.values(), g.h0.values());
}

Outcome gradients() {
  const auto start = Clock::now();
  fd_linear();
  for (CellKind kind : {CellKind::SRNN, CellKind::GRU})
    for (std::size_t steps : {1u, 4u, 9u}) fd_cell(kind, steps);
  const double elapsed = seconds_since(start);
  return {worst_rel <= 1e-5 && elapsed < 60,
          "tt_linear + TT-SRNN/TT-GRU T=1,4,9, max rel error " + fmt(worst_rel) + ", " + fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------------------

Outcome init_statistics() {
  const TTSpec s = TTSpec::uniform(ModeDims({10, 40, 25}), ModeDims({10, 40, 25}), 10);
  std::vector<std::vector<double>> draws(s.order());
  for (std::uint64_t seed = 1; draws[0].size() < 100000; ++seed) {
    const TTMatrix w = glorot_init(s, seed, false);
    for (std::size_t k = 0; k < s.order(); ++k) {
      const auto v = w.cores[k].values();
      draws[k].insert(draws[k].end(), v.begin(), v.end());
    }
  }
  Outcome out{true, ""};
  for (std::size_t k = 0; k < s.order(); ++k) {
    const auto& v = draws[k];
    long double sum = 0, sq = 0;
    for (double x : v) sum += x;
    const double mean = static_cast<double>(sum / v.size());
    for (double x : v) sq += (x - mean) * (x - mean);
    const double sd = std::sqrt(static_cast<double>(sq / (v.size() - 1)));
    const double sigma = glorot_stddev(s.row_modes()[k], s.col_modes()[k], s.rank(k), s.rank(k + 1));
    const double sd_err = std::abs(sd - sigma) / sigma;
    const double mean_se = std::abs(mean) / (sigma / std::sqrt(static_cast<double>(v.size())));
    out.pass = out.pass && sd_err <= 0.05 && mean_se <= 3.0;
    out.detail += (k ? "; " : "") + std::string("core ") + std::to_string(k + 1) + " n=" + std::to_string(v.size()) +
                  " std err " + fmt(100 * sd_err, 3) + "% mean " + fmt(mean_se, 3) + " SE";
  }
  return out;
}

// ---------------------------------------------------------------------------

double best_metric(const RunLog& log, std::size_t max_epoch) {
  double best = 0.0;
  for (const auto& e : log.epochs)
    if (e.epoch <= max_epoch) best = std::max(best, e.valid_metric);
  return best;
}

Outcome row_mnist() {
  const char* env = std::getenv("TTRNN_MNIST_DIR");
  const fs::path dir = env ? env : "/root/data/mnist";
  if (!fs::exists(dir / "train-images-idx3-ubyte") || !fs::exists(dir / "train-labels-idx1-ubyte"))
    return {false, "MNIST not found in " + dir.string() + " (set TTRNN_MNIST_DIR)"};
  const fs::path out = scratch("mnist_row");
  const TrainConfig c = TrainConfig::parse(
      "task = mnist_row\nmodel = gru\ntt = true\nhidden_modes = 10x10\ninput_modes = 4x8\nprojection = 32\n"
      "rank = 3\nbaseline_hidden = 256\nlr = 0.005\nbatch_size = 32\nepochs = 5\ntrain_subset = 10000\n"
      "train_images = " + (dir / "train-images-idx3-ubyte").string() + "\ntrain_labels = " +
      (dir / "train-labels-idx1-ubyte").string() + "\nout = " + out.string() + "\n");
  const auto start = Clock::now();
  std::ostringstream sink;
  const RunLog log = cmd_train(c, sink);
  const double elapsed = seconds_since(start);
  const double acc = best_metric(log, 5);
  return {acc >= 0.92 && elapsed <= 900,
          "row MNIST TT-GRU-H10x10-R3, 10k subset: best valid accuracy " + fmt(acc) + " in 5 epochs, " +
              fmt(elapsed, 4) + " s"};
}

Outcome synthetic_pianoroll() {
  const fs::path out = scratch("pianoroll");
  const TrainConfig c = TrainConfig::parse(
      "task = pianoroll\nsynthetic = true\nsynthetic_songs = 64\nsynthetic_steps = 48\nsynthetic_period = 8\n"
      "model = srnn\ntt = true\nhidden_modes = 8x4x8x4\ninput_modes = 4x4x4x4\nprojection = 256\nrank = 5\n"
      "baseline_hidden = 512\nlr = 0.01\nbatch_size = 16\nepochs = 50\nmax_steps = 200\nout = " +
      out.string() + "\n");
  const auto start = Clock::now();
  std::ostringstream sink;
  const RunLog log = cmd_train(c, sink);
  const double elapsed = seconds_since(start);
  double best = std::numeric_limits<double>::infinity();
  std::size_t reached = 0;
  for (const auto& e : log.epochs) {
    if (e.steps > 200) break;
    if (e.valid_loss < best) best = e.valid_loss;
    if (!reached && e.valid_loss < 3.0) reached = e.steps;
  }
  return {best < 3.0 && elapsed <= 900,
          "synthetic piano roll TT-SRNN-H8x4x8x4-R5: valid NLL < 3 after " + std::to_string(reached) +
              " steps, best " + fmt(best) + " within 200 steps, " + fmt(elapsed, 4) + " s"};
}

Outcome desk_training() {
  const Outcome a = row_mnist();
  const Outcome b = synthetic_pianoroll();
  return {a.pass && b.pass, "(a) " + std::string(a.pass ? "ok " : "FAILED ") + a.detail + "; (b) " +
                                (b.pass ? "ok " : "FAILED ") + b.detail};
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> doubling(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> sizes;
  for (std::size_t s = lo; s <= hi; s *= 2) sizes.push_back(s);
  return sizes;
}

// Two modes of at most 16 cap M at 256, so the TT sweep holds d = 6 and lets
// the modes grow (all at most 8). The dense sweep stops where the weight still
// fits in memory.
Outcome scaling() {
  const auto start = Clock::now();
  SweepConfig t;
  t.family = LayerFamily::TT;
  t.sizes = doubling(1 << 10, 1 << 16);
  t.rank = 4;
  t.order = 6;
  SweepConfig d;
  d.family = LayerFamily::Dense;
  d.sizes = doubling(1 << 10, 1 << 13);
  const SlopeFit tt_fit = fit_forward_slope(run_scaling_sweep(t));
  const SlopeFit dense_fit = fit_forward_slope(run_scaling_sweep(d));
  const double elapsed = seconds_since(start);
  return {tt_fit.slope <= 1.25 && dense_fit.slope >= 1.7 && elapsed <= 300,
          "TT (d=6, r=4, m<=8, M=N=2^10..2^16) slope " + fmt(tt_fit.slope) + "; dense (M=N=2^10..2^13) slope " +
              fmt(dense_fit.slope) + "; " + fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------------------

bool same_numbers(const RunLog& a, const RunLog& b) {
  if (a.config_hash != b.config_hash || a.epochs.size() != b.epochs.size() || a.best_epoch != b.best_epoch)
    return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const auto &x = a.epochs[i], &y = b.epochs[i];
    if (x.epoch != y.epoch || x.steps != y.steps || x.train_loss != y.train_loss ||
        x.valid_loss != y.valid_loss || x.valid_metric != y.valid_metric)
      return false;
  }
  return true;
}

Outcome determinism() {
  const fs::path a = scratch("det");
  auto config = [](const fs::path& out) {
    return TrainConfig::parse(
        "task = pianoroll\nsynthetic = true\nsynthetic_songs = 24\nsynthetic_steps = 20\nmodel = gru\n"
        "tt = true\nhidden_modes = 4x4\ninput_modes = 4x4\nprojection = 16\nrank = 3\nlr = 0.01\n"
        "batch_size = 8\nepochs = 4\nseed = 5\nout = " + out.string() + "\n");
  };
  std::ostringstream sink;
  const RunLog la = cmd_train(config(a), sink);
  fs::remove_all(a);
  const RunLog lb = cmd_train(config(a), sink);
  const bool logs = same_numbers(la, lb) && !la.epochs.empty();

  const EvalResult before = cmd_eval(a / "best.ckpt", std::nullopt, "test");
  save_checkpoint(a / "copy.ckpt", load_checkpoint(a / "best.ckpt"));
  const EvalResult after = cmd_eval(a / "copy.ckpt", std::nullopt, "test");
  const bool round_trip = before.loss == after.loss && before.metric == after.metric && before.count == after.count;
  return {logs && round_trip, std::string("run logs ") + (logs ? "identical" : "DIFFER") + ", checkpoint round trip " +
                                  (round_trip ? "bit-identical" : "DIFFERS") + " (test nll " + fmt(before.loss, 17) +
                                  ")"};
}

// ---------------------------------------------------------------------------

Outcome closed_forms() {
  // Four valid notes and a masked step: TP = 3, FP = 1, FN = 2.
  Matrix pred(1, 88), target(1, 88);
  pred(0, 0) = pred(0, 1) = pred(0, 2) = target(0, 0) = target(0, 1) = target(0, 2) = 1;
  pred(0, 3) = 1;
  target(0, 4) = target(0, 5) = 1;
  Matrix junk(1, 88, 1.0);
  Matrix mask{{1, 0}};
  const std::vector<Matrix> preds{pred, junk}, targets{target, Matrix(1, 88)};
  const FrameCounts counts = frame_counts(preds, targets, mask);
  const double acc = frame_accuracy(preds, targets, mask);

  Rng rng(8);
  std::vector<Matrix> half, logits, notes;
  for (int t = 0; t < 5; ++t) {
    Matrix y(2, 88);
    for (double& v : y.values()) v = rng.below(2);
    notes.push_back(y);
    half.emplace_back(2, 88, 0.5);
    logits.emplace_back(2, 88, 0.0);
  }
  const double ln2 = 88 * std::numbers::ln2;
  const double nll_probs = bernoulli_nll_from_probs(half, notes, Matrix());
  const double nll_logits = bernoulli_nll(logits, notes, Matrix()).nll;
  const bool pass = counts.true_pos == 3 && counts.false_pos == 1 && counts.false_neg == 2 &&
                    std::abs(acc - 0.5) <= 1e-12 && std::abs(nll_probs - ln2) <= 1e-12 &&
                    std::abs(nll_logits - ln2) <= 1e-12;
  return {pass, "ACC " + fmt(acc, 17) + " (TP=3 FP=1 FN=2), NLL at p=0.5 " + fmt(nll_probs, 17) + " / " +
                    fmt(nll_logits, 17) + " vs 88 ln2 = " + fmt(ln2, 17)};
}

}  // namespace

int main() {
  std::cout << "kernels: " << kernels::name(kernels::active().isa) << "\n";
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact parameter counts", exact_counts},
      {"TT forward equals dense oracle", oracle_equivalence},
      {"finite-difference gradients", gradients},
      {"Glorot initialization statistics", init_statistics},
      {"desk-scale training", desk_training},
      {"complexity scaling", scaling},
      {"determinism", determinism},
      {"metric closed forms", closed_forms},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "AC" << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << " [" << fmt(seconds_since(start), 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

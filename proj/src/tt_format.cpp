#include "ttrnn/tt_format.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "ttrnn/binary_io.hpp"
#include "ttrnn/error.hpp"
#include "ttrnn/rng.hpp"

namespace ttrnn {

TTSpec::TTSpec(ModeDims row_modes, ModeDims col_modes, std::vector<std::size_t> ranks)
    : row_modes_(std::move(row_modes)), col_modes_(std::move(col_modes)), ranks_(std::move(ranks)) {
  const std::size_t d = row_modes_.order();
  if (col_modes_.order() != d) {
    throw ShapeError("row and column factorizations differ in length (" + std::to_string(d) +
                     " vs " + std::to_string(col_modes_.order()) + ")");
  }
  if (ranks_.size() != d + 1) {
    throw ShapeError("expected " + std::to_string(d + 1) + " TT-ranks, got " +
                     std::to_string(ranks_.size()));
  }
  if (ranks_.front() != 1 || ranks_.back() != 1) throw ShapeError("TT-ranks must start and end with 1");
  for (std::size_t r : ranks_) {
    if (r == 0) throw ShapeError("TT-ranks must be positive");
  }
}

TTSpec TTSpec::uniform(ModeDims row_modes, ModeDims col_modes, std::size_t rank) {
  std::vector<std::size_t> ranks(row_modes.order() + 1, rank);
  ranks.front() = 1;
  ranks.back() = 1;
  return TTSpec(std::move(row_modes), std::move(col_modes), std::move(ranks));
}

std::size_t TTSpec::max_rank() const { return *std::max_element(ranks_.begin(), ranks_.end()); }

TTCore::TTCore(std::size_t rows, std::size_t cols, std::size_t rank_in, std::size_t rank_out)
    : rows_(rows), cols_(cols), rank_in_(rank_in), rank_out_(rank_out),
      values_(rows * cols * rank_in * rank_out, 0.0) {}

TTMatrix TTMatrix::zeros(const TTSpec& spec, bool with_bias) {
  std::vector<TTCore> cores;
  cores.reserve(spec.order());
  for (std::size_t k = 0; k < spec.order(); ++k) {
    cores.emplace_back(spec.row_modes()[k], spec.col_modes()[k], spec.rank(k), spec.rank(k + 1));
  }
  std::optional<std::vector<double>> bias;
  if (with_bias) bias.emplace(spec.rows(), 0.0);
  return TTMatrix{spec, std::move(cores), std::move(bias)};
}

void TTMatrix::validate() const {
  if (cores.size() != spec.order()) {
    throw ShapeError("TT matrix has " + std::to_string(cores.size()) + " cores, spec order is " +
                     std::to_string(spec.order()));
  }
  for (std::size_t k = 0; k < cores.size(); ++k) {
    const TTCore& c = cores[k];
    if (c.rows() != spec.row_modes()[k] || c.cols() != spec.col_modes()[k] ||
        c.rank_in() != spec.rank(k) || c.rank_out() != spec.rank(k + 1)) {
      throw ShapeError("core " + std::to_string(k + 1) + " does not match its spec position");
    }
  }
  if (bias && bias->size() != spec.rows()) throw ShapeError("TT bias length differs from M");
}

ParamList TTMatrix::parameters() {
  ParamList out;
  for (std::size_t k = 0; k < cores.size(); ++k) {
    out.push_back({"core" + std::to_string(k + 1), cores[k].values()});
  }
  if (bias) out.push_back({"bias", *bias});
  return out;
}

double tt_element(const TTMatrix& tt, std::uint64_t p, std::uint64_t q) {
  const MultiIndex rows = linear_to_multi(p, tt.spec.row_modes());
  const MultiIndex cols = linear_to_multi(q, tt.spec.col_modes());
  // Row vector carried along the chain: 1 x r_k after core k.
  std::vector<double> carry{1.0};
  for (std::size_t k = 0; k < tt.cores.size(); ++k) {
    const TTCore& core = tt.cores[k];
    const std::size_t i = rows[k] - 1;
    const std::size_t j = cols[k] - 1;
    std::vector<double> next(core.rank_out(), 0.0);
    for (std::size_t a = 0; a < core.rank_in(); ++a) {
      for (std::size_t b = 0; b < core.rank_out(); ++b) next[b] += carry[a] * core.at(i, j, a, b);
    }
    carry = std::move(next);
  }
  return carry[0];
}

Matrix tt_to_dense(const TTMatrix& tt, std::uint64_t cap) {
  const std::uint64_t m = tt.rows();
  const std::uint64_t n = tt.cols();
  if (n != 0 && m > cap / n) {
    throw SizeError("dense reconstruction of " + std::to_string(m) + "x" + std::to_string(n) +
                    " exceeds the cap of " + std::to_string(cap) + " entries");
  }
  Matrix dense(m, n);
  for (std::uint64_t p = 1; p <= m; ++p) {
    for (std::uint64_t q = 1; q <= n; ++q) dense(p - 1, q - 1) = tt_element(tt, p, q);
  }
  return dense;
}

std::uint64_t tt_param_count(const TTSpec& spec, bool include_bias) {
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < spec.order(); ++k) {
    total += std::uint64_t{spec.row_modes()[k]} * spec.col_modes()[k] * spec.rank(k) * spec.rank(k + 1);
  }
  if (include_bias) total += spec.rows();
  return total;
}

double glorot_stddev(std::size_t rows, std::size_t cols, std::size_t rank_in, std::size_t rank_out) {
  return std::sqrt(2.0 / static_cast<double>(cols * rank_out + rows * rank_in));
}

TTMatrix glorot_init(const TTSpec& spec, std::uint64_t seed, bool with_bias) {
  TTMatrix tt = TTMatrix::zeros(spec, with_bias);
  Rng rng(seed);
  for (TTCore& core : tt.cores) {
    const double sigma = glorot_stddev(core.rows(), core.cols(), core.rank_in(), core.rank_out());
    for (double& v : core.values()) v = sigma * rng.normal();
  }
  return tt;
}

void write_tt(std::ostream& out, const TTMatrix& tt) {
  tt.validate();
  out.write("TTM1", 4);
  const TTSpec& spec = tt.spec;
  binio::write_u32(out, spec.order());
  for (std::size_t m : spec.row_modes()) binio::write_u32(out, m);
  for (std::size_t n : spec.col_modes()) binio::write_u32(out, n);
  for (std::size_t r : spec.ranks()) binio::write_u32(out, r);
  binio::write<std::uint8_t>(out, tt.bias ? 1 : 0);
  for (const TTCore& core : tt.cores) binio::write_doubles(out, core.values());
  if (tt.bias) binio::write_doubles(out, *tt.bias);
  if (!out) throw FormatError("failed writing TT matrix");
}

TTMatrix read_tt(std::istream& in) {
  binio::expect_magic(in, "TTM1", "TT matrix");
  const auto d = binio::read<std::uint32_t>(in, "TT order");
  if (d == 0 || d > 64) throw FormatError("implausible TT order " + std::to_string(d));
  auto read_list = [&](std::size_t count, const char* what) {
    std::vector<std::size_t> values(count);
    for (auto& v : values) v = binio::read<std::uint32_t>(in, what);
    return values;
  };
  auto rows = read_list(d, "row modes");
  auto cols = read_list(d, "column modes");
  auto ranks = read_list(d + 1, "TT-ranks");
  const auto flag = binio::read<std::uint8_t>(in, "bias flag");
  if (flag > 1) throw FormatError("bad bias flag in TT matrix");
  std::optional<TTSpec> spec;
  try {
    spec.emplace(ModeDims(std::move(rows)), ModeDims(std::move(cols)), std::move(ranks));
  } catch (const ShapeError& e) {
    throw FormatError(std::string("invalid TT header: ") + e.what());
  }
  long double values = flag == 1 ? static_cast<long double>(spec->rows()) : 0.0L;
  for (std::size_t k = 0; k < d; ++k) {
    values += static_cast<long double>(spec->row_modes()[k]) * spec->col_modes()[k] * spec->rank(k) *
              spec->rank(k + 1);
  }
  if (values > static_cast<long double>(std::uint64_t{1} << 28)) {
    throw FormatError("implausible TT matrix size in header");
  }
  binio::require_bytes(in, 8 * static_cast<std::uint64_t>(values), "TT matrix values");
  TTMatrix tt = TTMatrix::zeros(*spec, flag == 1);
  for (TTCore& core : tt.cores) binio::read_doubles(in, core.values(), "core values");
  if (tt.bias) binio::read_doubles(in, *tt.bias, "bias values");
  return tt;
}

}  // namespace ttrnn

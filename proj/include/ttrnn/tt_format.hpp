#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ttrnn/matrix.hpp"
#include "ttrnn/params.hpp"
#include "ttrnn/tensor_core.hpp"

namespace ttrnn {

/// Shape of a TT matrix: row modes m_k, column modes n_k and ranks r_0..r_d
/// with r_0 = r_d = 1.
class TTSpec {
 public:
  TTSpec(ModeDims row_modes, ModeDims col_modes, std::vector<std::size_t> ranks);

  /// Interior ranks all equal to `rank`.
  static TTSpec uniform(ModeDims row_modes, ModeDims col_modes, std::size_t rank);

  std::size_t order() const { return row_modes_.order(); }
  const ModeDims& row_modes() const { return row_modes_; }
  const ModeDims& col_modes() const { return col_modes_; }
  const std::vector<std::size_t>& ranks() const { return ranks_; }
  std::size_t rank(std::size_t k) const { return ranks_[k]; }
  std::size_t rows() const { return static_cast<std::size_t>(row_modes_.product()); }
  std::size_t cols() const { return static_cast<std::size_t>(col_modes_.product()); }
  std::size_t max_rank() const;

  friend bool operator==(const TTSpec&, const TTSpec&) = default;

 private:
  ModeDims row_modes_;
  ModeDims col_modes_;
  std::vector<std::size_t> ranks_;
};

/// One TT-core, shape (m_k, n_k, r_{k-1}, r_k), row-major. Slice (i, j) is the
/// r_{k-1} x r_k matrix G_k[i, j].
class TTCore {
 public:
  TTCore(std::size_t rows, std::size_t cols, std::size_t rank_in, std::size_t rank_out);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t rank_in() const { return rank_in_; }
  std::size_t rank_out() const { return rank_out_; }
  std::size_t size() const { return values_.size(); }

  // 0-based access.
  double& at(std::size_t i, std::size_t j, std::size_t a, std::size_t b) {
    return values_[((i * cols_ + j) * rank_in_ + a) * rank_out_ + b];
  }
  double at(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
    return values_[((i * cols_ + j) * rank_in_ + a) * rank_out_ + b];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const TTCore&, const TTCore&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t rank_in_;
  std::size_t rank_out_;
  std::vector<double> values_;
};

/// A compressed M x N linear map: chain of cores plus an optional dense bias.
struct TTMatrix {
  TTSpec spec;
  std::vector<TTCore> cores;
  std::optional<std::vector<double>> bias;

  /// All-zero cores (and zero bias when requested).
  static TTMatrix zeros(const TTSpec& spec, bool with_bias);

  std::size_t rows() const { return spec.rows(); }
  std::size_t cols() const { return spec.cols(); }

  /// Throws ShapeError if the cores do not chain according to `spec`.
  void validate() const;

  ParamList parameters();

  friend bool operator==(const TTMatrix&, const TTMatrix&) = default;
};

inline constexpr std::uint64_t kDefaultDenseCap = std::uint64_t{1} << 24;

/// W(p, q) for 1-based p, q: the product of core slices G_1[i_1, j_1] ... G_d[i_d, j_d].
double tt_element(const TTMatrix& tt, std::uint64_t p, std::uint64_t q);

/// Materialize W. Throws SizeError when M * N exceeds `cap`.
Matrix tt_to_dense(const TTMatrix& tt, std::uint64_t cap = kDefaultDenseCap);

/// Sum over cores of m_k n_k r_{k-1} r_k, plus M when `include_bias`.
std::uint64_t tt_param_count(const TTSpec& spec, bool include_bias);

/// Glorot scale for one core: sqrt(2 / (n_k r_k + m_k r_{k-1})).
double glorot_stddev(std::size_t rows, std::size_t cols, std::size_t rank_in, std::size_t rank_out);

/// Cores drawn i.i.d. N(0, sigma_k^2) in storage order, core 1 first; bias zero.
TTMatrix glorot_init(const TTSpec& spec, std::uint64_t seed, bool with_bias = true);

// Binary container "TTM1". All integers are little-endian uint32, floats
// little-endian IEEE-754 binary64:
//   "TTM1" | d | m_1..m_d | n_1..n_d | r_0..r_d | u8 has_bias | cores | bias
void write_tt(std::ostream& out, const TTMatrix& tt);
TTMatrix read_tt(std::istream& in);

}  // namespace ttrnn

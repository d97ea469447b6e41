#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "ttrnn/matrix.hpp"
#include "ttrnn/params.hpp"
#include "ttrnn/tt_format.hpp"

namespace ttrnn {

/// Uncompressed M x N weight with optional bias.
struct DenseMatrix {
  Matrix weight;
  std::optional<std::vector<double>> bias;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

/// y = W x + b where W is either stored densely or as a TT matrix. Both forms
/// expose the same (in_dim, out_dim) contract.
class LinearMap {
 public:
  explicit LinearMap(DenseMatrix dense);
  explicit LinearMap(TTMatrix tt);

  bool is_tt() const { return std::holds_alternative<TTMatrix>(impl_); }
  std::size_t in_dim() const;
  std::size_t out_dim() const;
  bool has_bias() const;
  std::uint64_t param_count() const;

  const TTMatrix& tt() const { return std::get<TTMatrix>(impl_); }
  TTMatrix& tt() { return std::get<TTMatrix>(impl_); }
  const DenseMatrix& dense() const { return std::get<DenseMatrix>(impl_); }
  DenseMatrix& dense() { return std::get<DenseMatrix>(impl_); }

  const std::optional<std::vector<double>>& bias() const;
  std::optional<std::vector<double>>& bias();

  /// Same structure, every value zero. Used as a gradient accumulator.
  LinearMap zeros_like() const;

  ParamList parameters();

  friend bool operator==(const LinearMap&, const LinearMap&) = default;

 private:
  std::variant<DenseMatrix, TTMatrix> impl_;
};

/// Intermediates recorded by forward for the reverse pass. For a TT map the
/// stages are the partially contracted tensors after cores 1..d-1.
struct LinearCache {
  Matrix input;
  std::vector<std::vector<double>> stages;
  bool valid = false;
};

struct LinearGrads {
  LinearMap params;
  Matrix input;
};

/// Batched y = W x + b over the rows of x. A TT map is applied by contracting
/// the cores one at a time; W is never formed.
Matrix forward(const LinearMap& map, const Matrix& x);
Matrix forward(const LinearMap& map, const Matrix& x, LinearCache& cache);

/// Gradients for dL/dy = grad_out. Parameter gradients are summed over the batch.
LinearGrads backward(const LinearMap& map, const Matrix& x, const Matrix& grad_out);

/// Reverse pass reusing a cache from forward(). Parameter gradients are added
/// into `grad` (which must be shaped like `map`); dL/dx is written to
/// `grad_input` when it is non-null.
void backward_accumulate(const LinearMap& map, const LinearCache& cache, const Matrix& grad_out,
                         LinearMap& grad, Matrix* grad_input);

struct DenseEquivalent {
  Matrix weight;
  std::vector<double> bias;  // zeros when the map has no bias
};

DenseEquivalent dense_equivalent(const LinearMap& map, std::uint64_t cap = kDefaultDenseCap);

/// Floats held by the cached stages of a TT forward pass on `batch` rows.
std::uint64_t tt_intermediate_count(const TTSpec& spec, std::size_t batch);

}  // namespace ttrnn

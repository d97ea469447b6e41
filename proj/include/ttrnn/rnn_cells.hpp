#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttrnn/matrix.hpp"
#include "ttrnn/params.hpp"
#include "ttrnn/tt_linear.hpp"

namespace ttrnn {

enum class CellKind { SRNN, GRU };

/// h_t = tanh(W_xh x_t + W_hh h_{t-1} + b_h). The maps carry no bias of
/// their own; b_h is the single bias of the pre-activation.
struct SRNNParams {
  LinearMap w_xh;
  LinearMap w_hh;
  std::vector<double> b_h;

  friend bool operator==(const SRNNParams&, const SRNNParams&) = default;
};

/// r_t = sigm(W_xr x + W_hr h + b_r)
/// z_t = sigm(W_xz x + W_hz h + b_z)
/// c_t = tanh(W_xh x + W_hh (r_t * h) + b_h)
/// h_t = (1 - z_t) * h + z_t * c_t
struct GRUParams {
  LinearMap w_xr;
  LinearMap w_hr;
  LinearMap w_xz;
  LinearMap w_hz;
  LinearMap w_xh;
  LinearMap w_hh;
  std::vector<double> b_r;
  std::vector<double> b_z;
  std::vector<double> b_h;

  friend bool operator==(const GRUParams&, const GRUParams&) = default;
};

/// Everything needed to build a cell. For the TT parameterization the input
/// side maps use (hidden_modes x input_modes) and the hidden side maps use
/// (hidden_modes x hidden_modes), all with the same uniform rank.
struct CellTopology {
  CellKind kind = CellKind::SRNN;
  bool tt = false;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::optional<ModeDims> input_modes;
  std::optional<ModeDims> hidden_modes;
  std::size_t rank = 1;

  static CellTopology dense(CellKind kind, std::size_t input_dim, std::size_t hidden_dim);
  static CellTopology tensor_train(CellKind kind, ModeDims input_modes, ModeDims hidden_modes,
                                   std::size_t rank);

  /// Throws ConfigError when the mode products disagree with the dims.
  void validate() const;
  /// Conventional model name, e.g. "TT-GRU-H10x10-R3" or "RNN-H256".
  std::string name() const;
};

class Cell {
 public:
  explicit Cell(SRNNParams p);
  explicit Cell(GRUParams p);

  CellKind kind() const;
  bool is_tt() const;
  std::size_t input_dim() const;
  std::size_t hidden_dim() const;
  std::uint64_t param_count() const;

  const SRNNParams& srnn() const { return std::get<SRNNParams>(impl_); }
  SRNNParams& srnn() { return std::get<SRNNParams>(impl_); }
  const GRUParams& gru() const { return std::get<GRUParams>(impl_); }
  GRUParams& gru() { return std::get<GRUParams>(impl_); }

  Cell zeros_like() const;
  ParamList parameters();

  /// Every map replaced by its dense equivalent.
  Cell densified() const;

  friend bool operator==(const Cell&, const Cell&) = default;

 private:
  std::variant<SRNNParams, GRUParams> impl_;
};

/// Glorot-initialized cell; dense maps use the d = 1 case of the TT formula.
Cell init_cell(const CellTopology& topology, std::uint64_t seed);

Matrix srnn_step(const SRNNParams& params, const Matrix& x, const Matrix& h_prev);
Matrix gru_step(const GRUParams& params, const Matrix& x, const Matrix& h_prev);
Matrix cell_step(const Cell& cell, const Matrix& x, const Matrix& h_prev);

/// Per-step activations kept for backpropagation through time.
struct StepCache {
  std::vector<LinearCache> maps;  // SRNN: xh, hh. GRU: xr, hr, xz, hz, xh, hh
  Matrix h_prev;
  Matrix h_new;  // pre-mask output of the step
  Matrix r;
  Matrix z;
  Matrix candidate;
};

struct UnrollCache {
  std::vector<StepCache> steps;
  Matrix mask;
};

struct UnrollResult {
  std::vector<Matrix> hidden;  // h_1..h_T, each batch x M
  UnrollCache cache;
};

/// Runs the cell over `sequence` (T entries of batch x N). Rows whose mask is 0
/// at step t carry h_{t-1} forward unchanged. An empty h0 means zeros; an
/// empty mask means all ones. Activations are cached when `keep_cache`.
UnrollResult unroll(const Cell& cell, const std::vector<Matrix>& sequence, const Matrix& h0,
                    const Matrix& mask, bool keep_cache = true);

struct CellGrads {
  Cell params;
  std::vector<Matrix> inputs;  // dL/dx_t
  Matrix h0;                   // dL/dh_0
};

/// Reverse-mode gradients given dL/dh_t for every step (entries may be empty,
/// meaning zero). Requires the cache from a keep_cache unroll.
CellGrads bptt(const Cell& cell, const UnrollCache& cache, const std::vector<Matrix>& grad_hidden);

}  // namespace ttrnn

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ttrnn/matrix.hpp"
#include "ttrnn/params.hpp"
#include "ttrnn/rnn_cells.hpp"
#include "ttrnn/tt_linear.hpp"

namespace ttrnn {

// ---------------------------------------------------------------------------
// Losses and metrics

struct ClassificationLoss {
  double loss = 0.0;      // mean cross-entropy over the batch
  double accuracy = 0.0;  // fraction of argmax hits
  std::size_t correct = 0;
  Matrix grad_logits;  // d(mean loss)/d logits
};

/// Softmax cross-entropy. Labels must lie in [0, C) or DataError is thrown.
ClassificationLoss softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

struct PredictionLoss {
  double nll = 0.0;        // mean over valid steps of the per-step note NLL sum
  double total = 0.0;      // sum over valid steps
  std::size_t steps = 0;   // valid (row, t) pairs
  std::vector<Matrix> grad_logits;  // d(nll)/d logits, per step
};

/// Independent-Bernoulli note NLL from logits. `mask` is batch x T; an empty
/// mask means every step is valid.
PredictionLoss bernoulli_nll(const std::vector<Matrix>& logits, const std::vector<Matrix>& targets,
                             const Matrix& mask);

/// Same reduction from probabilities in (0, 1); used for closed-form checks.
double bernoulli_nll_from_probs(const std::vector<Matrix>& probs,
                                const std::vector<Matrix>& targets, const Matrix& mask);

struct FrameCounts {
  std::uint64_t true_pos = 0;
  std::uint64_t false_pos = 0;
  std::uint64_t false_neg = 0;

  /// TP / (TP + FP + FN); 1 when the denominator is zero.
  double accuracy() const;
  FrameCounts& operator+=(const FrameCounts& o);
};

/// Pooled counts over all valid (step, note) pairs. Predictions are binary;
/// see threshold().
FrameCounts frame_counts(const std::vector<Matrix>& predicted, const std::vector<Matrix>& targets,
                         const Matrix& mask);
double frame_accuracy(const std::vector<Matrix>& predicted, const std::vector<Matrix>& targets,
                      const Matrix& mask);

/// 1 where p >= 0.5, else 0.
Matrix threshold(const Matrix& probs);
double logistic(double x);

// ---------------------------------------------------------------------------
// Parameter accounting

/// Recurrent-cell parameters only: per gate, the input map, the hidden map and
/// one bias of length M. Projection and output layers are not counted.
std::uint64_t count_cell_params(const CellTopology& topology);

struct ModelReport {
  std::string name;
  std::string baseline_name;
  std::uint64_t rnn_param_count = 0;
  std::uint64_t baseline_param_count = 0;
  double compression_ratio = 1.0;  // baseline / rnn
};

ModelReport make_report(const CellTopology& model, const CellTopology& baseline);

/// Aligned plain-text table, one row per report.
std::string format_report_table(const std::vector<ModelReport>& reports);
/// One "key=value ..." record.
std::string format_report_record(const ModelReport& report);

// ---------------------------------------------------------------------------
// Full sequence models: projection -> recurrent cell -> output head

enum class TaskKind { Classification, Prediction };

struct SequenceModel {
  TaskKind task;
  LinearMap projection;  // raw input -> cell input (dense, with bias)
  Cell cell;
  LinearMap output;  // hidden -> classes or notes (dense, with bias)

  SequenceModel zeros_like() const;
  ParamList parameters();

  friend bool operator==(const SequenceModel&, const SequenceModel&) = default;
};

struct ModelShape {
  TaskKind task = TaskKind::Classification;
  std::size_t raw_input = 28;
  std::size_t outputs = 10;
  CellTopology cell;
};

SequenceModel init_model(const ModelShape& shape, std::uint64_t seed);

/// A padded batch. inputs[t] is batch x N; mask is batch x T with 1s then 0s.
/// Classification batches fill `labels`; prediction batches fill `targets`.
struct SequenceBatch {
  std::vector<Matrix> inputs;
  Matrix mask;
  std::vector<int> labels;
  std::vector<Matrix> targets;

  std::size_t batch_size() const { return mask.rows(); }
  std::size_t steps() const { return inputs.size(); }
};

struct BatchMetrics {
  double loss_sum = 0.0;      // summed per-sample (classification) or per-step (prediction) loss
  std::size_t count = 0;      // samples or valid steps
  std::size_t correct = 0;    // classification hits
  FrameCounts frames;         // prediction counts

  double mean_loss() const { return count ? loss_sum / static_cast<double>(count) : 0.0; }
  BatchMetrics& operator+=(const BatchMetrics& o);
};

/// Forward pass and metrics without gradients.
BatchMetrics evaluate_batch(const SequenceModel& model, const SequenceBatch& batch);

/// Forward and backward pass. Gradients of the batch-mean loss are added to
/// `grad`, which must be shaped like `model`.
BatchMetrics loss_and_grad(const SequenceModel& model, const SequenceBatch& batch,
                           SequenceModel& grad);

}  // namespace ttrnn

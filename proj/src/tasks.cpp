#include "ttrnn/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "ttrnn/error.hpp"
#include "ttrnn/rng.hpp"

namespace ttrnn {

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ClassificationLoss softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  const std::size_t batch = logits.rows();
  const std::size_t classes = logits.cols();
  if (labels.size() != batch) throw ShapeError("one label per row is required");
  if (batch == 0) throw ShapeError("empty batch");
  ClassificationLoss out;
  out.grad_logits = Matrix(batch, classes);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw DataError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    }
    const auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double v : row) denom += std::exp(v - peak);
    const double log_denom = std::log(denom) + peak;
    total += log_denom - row[label];
    std::size_t best = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (row[c] > row[best]) best = c;
      const double p = std::exp(row[c] - log_denom);
      out.grad_logits(r, c) = (p - (static_cast<int>(c) == label ? 1.0 : 0.0)) * inv_batch;
    }
    if (static_cast<int>(best) == label) ++out.correct;
  }
  out.loss = total * inv_batch;
  out.accuracy = static_cast<double>(out.correct) * inv_batch;
  return out;
}

namespace {

void check_sequence_shapes(const std::vector<Matrix>& a, const std::vector<Matrix>& b,
                           const Matrix& mask) {
  if (a.size() != b.size()) throw ShapeError("prediction and target sequences differ in length");
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].rows() != b[t].rows() || a[t].cols() != b[t].cols()) {
      throw ShapeError("prediction and target frames differ in shape at step " + std::to_string(t));
    }
  }
  if (!mask.empty() && (mask.cols() != a.size() || (!a.empty() && mask.rows() != a[0].rows()))) {
    throw ShapeError("mask must be batch x T");
  }
}

bool valid_step(const Matrix& mask, std::size_t r, std::size_t t) {
  return mask.empty() || mask(r, t) != 0.0;
}

}  // namespace

PredictionLoss bernoulli_nll(const std::vector<Matrix>& logits, const std::vector<Matrix>& targets,
                             const Matrix& mask) {
  check_sequence_shapes(logits, targets, mask);
  PredictionLoss out;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    for (std::size_t r = 0; r < logits[t].rows(); ++r) {
      if (!valid_step(mask, r, t)) continue;
      ++out.steps;
      for (std::size_t c = 0; c < logits[t].cols(); ++c) {
        const double l = logits[t](r, c);
        const double y = targets[t](r, c);
        out.total += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
      }
    }
  }
  out.nll = out.steps ? out.total / static_cast<double>(out.steps) : 0.0;
  const double scale = out.steps ? 1.0 / static_cast<double>(out.steps) : 0.0;
  out.grad_logits.reserve(logits.size());
  for (std::size_t t = 0; t < logits.size(); ++t) {
    Matrix g(logits[t].rows(), logits[t].cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      if (!valid_step(mask, r, t)) continue;
      for (std::size_t c = 0; c < g.cols(); ++c) {
        g(r, c) = (logistic(logits[t](r, c)) - targets[t](r, c)) * scale;
      }
    }
    out.grad_logits.push_back(std::move(g));
  }
  return out;
}

double bernoulli_nll_from_probs(const std::vector<Matrix>& probs, const std::vector<Matrix>& targets,
                                const Matrix& mask) {
  check_sequence_shapes(probs, targets, mask);
  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    for (std::size_t r = 0; r < probs[t].rows(); ++r) {
      if (!valid_step(mask, r, t)) continue;
      ++steps;
      for (std::size_t c = 0; c < probs[t].cols(); ++c) {
        const double p = probs[t](r, c);
        const double y = targets[t](r, c);
        total -= y * std::log(p) + (1.0 - y) * std::log1p(-p);
      }
    }
  }
  return steps ? total / static_cast<double>(steps) : 0.0;
}

double FrameCounts::accuracy() const {
  const std::uint64_t denom = true_pos + false_pos + false_neg;
  return denom == 0 ? 1.0 : static_cast<double>(true_pos) / static_cast<double>(denom);
}

FrameCounts& FrameCounts::operator+=(const FrameCounts& o) {
  true_pos += o.true_pos;
  false_pos += o.false_pos;
  false_neg += o.false_neg;
  return *this;
}

FrameCounts frame_counts(const std::vector<Matrix>& predicted, const std::vector<Matrix>& targets,
                         const Matrix& mask) {
  check_sequence_shapes(predicted, targets, mask);
  FrameCounts counts;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    for (std::size_t r = 0; r < predicted[t].rows(); ++r) {
      if (!valid_step(mask, r, t)) continue;
      for (std::size_t c = 0; c < predicted[t].cols(); ++c) {
        const bool on = predicted[t](r, c) >= 0.5;
        const bool truth = targets[t](r, c) >= 0.5;
        if (on && truth) ++counts.true_pos;
        else if (on) ++counts.false_pos;
        else if (truth) ++counts.false_neg;
      }
    }
  }
  return counts;
}

double frame_accuracy(const std::vector<Matrix>& predicted, const std::vector<Matrix>& targets,
                      const Matrix& mask) {
  return frame_counts(predicted, targets, mask).accuracy();
}

Matrix threshold(const Matrix& probs) {
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.size(); ++i) out.data()[i] = probs.data()[i] >= 0.5 ? 1.0 : 0.0;
  return out;
}

std::uint64_t count_cell_params(const CellTopology& t) {
  t.validate();
  const std::uint64_t gates = t.kind == CellKind::SRNN ? 1 : 3;
  const std::uint64_t m = t.hidden_dim;
  std::uint64_t per_gate = 0;
  if (t.tt) {
    per_gate = tt_param_count(TTSpec::uniform(*t.hidden_modes, *t.input_modes, t.rank), false) +
               tt_param_count(TTSpec::uniform(*t.hidden_modes, *t.hidden_modes, t.rank), false);
  } else {
    per_gate = m * t.input_dim + m * m;
  }
  return gates * (per_gate + m);
}

ModelReport make_report(const CellTopology& model, const CellTopology& baseline) {
  ModelReport r;
  r.name = model.name();
  r.baseline_name = baseline.name();
  r.rnn_param_count = count_cell_params(model);
  r.baseline_param_count = count_cell_params(baseline);
  r.compression_ratio =
      static_cast<double>(r.baseline_param_count) / static_cast<double>(r.rnn_param_count);
  return r;
}

std::string format_report_table(const std::vector<ModelReport>& reports) {
  std::size_t name_w = 5;
  std::size_t base_w = 8;
  for (const auto& r : reports) {
    name_w = std::max(name_w, r.name.size());
    base_w = std::max(base_w, r.baseline_name.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << "Model" << "  " << std::right
     << std::setw(12) << "RNN Params" << "  " << std::setw(9) << "Compr." << "  " << std::left
     << std::setw(static_cast<int>(base_w)) << "Baseline" << "  " << std::right << std::setw(12)
     << "Base Params" << "\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(static_cast<int>(name_w)) << r.name << "  " << std::right
       << std::setw(12) << r.rnn_param_count << "  " << std::setw(9) << std::fixed
       << std::setprecision(2) << r.compression_ratio << "  " << std::left
       << std::setw(static_cast<int>(base_w)) << r.baseline_name << "  " << std::right
       << std::setw(12) << r.baseline_param_count << "\n";
  }
  return os.str();
}

std::string format_report_record(const ModelReport& r) {
  std::ostringstream os;
  os << "model=" << r.name << " rnn_params=" << r.rnn_param_count << " baseline=" << r.baseline_name
     << " baseline_params=" << r.baseline_param_count << " compression=" << std::setprecision(17)
     << r.compression_ratio;
  return os.str();
}

// ---------------------------------------------------------------------------

SequenceModel SequenceModel::zeros_like() const {
  return SequenceModel{task, projection.zeros_like(), cell.zeros_like(), output.zeros_like()};
}

ParamList SequenceModel::parameters() {
  ParamList out;
  append_prefixed(out, "projection.", projection.parameters());
  append_prefixed(out, "cell.", cell.parameters());
  append_prefixed(out, "output.", output.parameters());
  return out;
}

namespace {

LinearMap dense_layer(std::size_t in, std::size_t out, std::uint64_t seed) {
  Matrix w(out, in);
  Rng rng(seed);
  const double sigma = glorot_stddev(out, in, 1, 1);
  for (double& v : w.values()) v = sigma * rng.normal();
  return LinearMap(DenseMatrix{std::move(w), std::vector<double>(out, 0.0)});
}

struct ForwardState {
  std::vector<LinearCache> projection;
  std::vector<Matrix> projected;
  UnrollResult unrolled;
  std::vector<LinearCache> output;
  std::vector<Matrix> logits;
};

ForwardState run_forward(const SequenceModel& model, const SequenceBatch& batch, bool keep) {
  const std::size_t steps = batch.steps();
  if (steps == 0) throw ShapeError("batch has no time steps");
  ForwardState st;
  st.projected.reserve(steps);
  if (keep) st.projection.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    st.projected.push_back(keep ? forward(model.projection, batch.inputs[t], st.projection[t])
                                : forward(model.projection, batch.inputs[t]));
  }
  st.unrolled = unroll(model.cell, st.projected, Matrix(), batch.mask, keep);
  if (model.task == TaskKind::Classification) {
    st.output.resize(1);
    const Matrix& last = st.unrolled.hidden.back();
    st.logits.push_back(keep ? forward(model.output, last, st.output[0]) : forward(model.output, last));
  } else {
    if (keep) st.output.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const Matrix& h = st.unrolled.hidden[t];
      st.logits.push_back(keep ? forward(model.output, h, st.output[t]) : forward(model.output, h));
    }
  }
  return st;
}

BatchMetrics metrics_for(const SequenceModel& model, const SequenceBatch& batch,
                         const ForwardState& st, ClassificationLoss* cls, PredictionLoss* pred) {
  BatchMetrics m;
  if (model.task == TaskKind::Classification) {
    *cls = softmax_cross_entropy(st.logits[0], batch.labels);
    m.loss_sum = cls->loss * static_cast<double>(batch.batch_size());
    m.count = batch.batch_size();
    m.correct = cls->correct;
  } else {
    *pred = bernoulli_nll(st.logits, batch.targets, batch.mask);
    m.loss_sum = pred->total;
    m.count = pred->steps;
    std::vector<Matrix> on;
    on.reserve(st.logits.size());
    for (const Matrix& l : st.logits) {
      Matrix p(l.rows(), l.cols());
      for (std::size_t i = 0; i < l.size(); ++i) p.data()[i] = l.data()[i] >= 0.0 ? 1.0 : 0.0;
      on.push_back(std::move(p));
    }
    m.frames = frame_counts(on, batch.targets, batch.mask);
  }
  return m;
}

}  // namespace

SequenceModel init_model(const ModelShape& shape, std::uint64_t seed) {
  shape.cell.validate();
  Rng seeds(seed);
  LinearMap projection = dense_layer(shape.raw_input, shape.cell.input_dim, seeds.next_u64());
  Cell cell = init_cell(shape.cell, seeds.next_u64());
  LinearMap output = dense_layer(shape.cell.hidden_dim, shape.outputs, seeds.next_u64());
  return SequenceModel{shape.task, std::move(projection), std::move(cell), std::move(output)};
}

BatchMetrics& BatchMetrics::operator+=(const BatchMetrics& o) {
  loss_sum += o.loss_sum;
  count += o.count;
  correct += o.correct;
  frames += o.frames;
  return *this;
}

BatchMetrics evaluate_batch(const SequenceModel& model, const SequenceBatch& batch) {
  ForwardState st = run_forward(model, batch, false);
  ClassificationLoss cls;
  PredictionLoss pred;
  return metrics_for(model, batch, st, &cls, &pred);
}

BatchMetrics loss_and_grad(const SequenceModel& model, const SequenceBatch& batch,
                           SequenceModel& grad) {
  ForwardState st = run_forward(model, batch, true);
  ClassificationLoss cls;
  PredictionLoss pred;
  BatchMetrics metrics = metrics_for(model, batch, st, &cls, &pred);

  const std::size_t steps = batch.steps();
  std::vector<Matrix> grad_hidden(steps);
  if (model.task == TaskKind::Classification) {
    backward_accumulate(model.output, st.output[0], cls.grad_logits, grad.output, &grad_hidden.back());
  } else {
    for (std::size_t t = 0; t < steps; ++t) {
      backward_accumulate(model.output, st.output[t], pred.grad_logits[t], grad.output, &grad_hidden[t]);
    }
  }
  CellGrads cg = bptt(model.cell, st.unrolled.cache, grad_hidden);
  {
    auto dst = grad.cell.parameters();
    auto src = cg.params.parameters();
    for (std::size_t i = 0; i < dst.size(); ++i)
      for (std::size_t j = 0; j < dst[i].values.size(); ++j) dst[i].values[j] += src[i].values[j];
  }
  for (std::size_t t = 0; t < steps; ++t) {
    backward_accumulate(model.projection, st.projection[t], cg.inputs[t], grad.projection, nullptr);
  }
  return metrics;
}

}  // namespace ttrnn

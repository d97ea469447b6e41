#include "ttrnn/app.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "ttrnn/checkpoint.hpp"
#include "ttrnn/error.hpp"

namespace ttrnn {

namespace {

constexpr std::size_t kMnistTrain = 50000;
constexpr std::uint64_t kEpochSeedStep = 0x9E3779B97F4A7C15ULL;

SerializeMode serialize_mode(TaskName task) {
  switch (task) {
    case TaskName::MnistPixel: return SerializeMode::Pixel;
    case TaskName::MnistPermuted: return SerializeMode::PermutedPixel;
    default: return SerializeMode::Row;
  }
}

std::vector<std::size_t> task_permutation(const TrainConfig& c, const ImageDataset& d) {
  if (c.task != TaskName::MnistPermuted) return {};
  return make_permutation(d.rows * d.cols, c.perm_seed);
}

ImageDataset take(const ImageDataset& d, std::size_t limit) {
  return limit == 0 || limit >= d.size() ? d : d.slice(0, limit);
}

ImageDataset load_images(const TrainConfig& c, const std::string& split) {
  if (split == "test") {
    if (c.test_images.empty() || c.test_labels.empty()) {
      throw ConfigError("test_images and test_labels are required for the test split");
    }
    return read_idx(c.test_images, c.test_labels);
  }
  if (c.train_images.empty() || c.train_labels.empty()) {
    throw ConfigError("train_images and train_labels are required");
  }
  const ImageDataset all = read_idx(c.train_images, c.train_labels);
  // The last sixth (10000 of the standard 60000) is held out for validation.
  const std::size_t n_train = all.size() >= kMnistTrain + 10000 ? kMnistTrain : all.size() - all.size() / 6;
  if (n_train == 0 || n_train == all.size()) throw DataError("training file too small to split");
  if (split == "train") return take(all.slice(0, n_train), c.train_subset);
  if (split == "valid") return take(all.slice(n_train, all.size() - n_train), c.valid_subset);
  throw ConfigError("unknown split '" + split + "'");
}

PianoRollDataset load_songs(const TrainConfig& c, const std::string& split) {
  if (c.synthetic) {
    std::uint64_t offset = split == "train" ? 0 : split == "valid" ? 1 : 2;
    if (split != "train" && split != "valid" && split != "test") {
      throw ConfigError("unknown split '" + split + "'");
    }
    return synthetic_pianoroll(c.synthetic_songs, c.synthetic_steps, c.data_seed + offset,
                               c.synthetic_period);
  }
  const std::string& path = split == "train" ? c.train_path : split == "valid" ? c.valid_path : c.test_path;
  if (split != "train" && split != "valid" && split != "test") {
    throw ConfigError("unknown split '" + split + "'");
  }
  if (path.empty()) throw ConfigError(split + "_path is required for the piano-roll task");
  auto d = read_pianoroll(path);
  if (d.songs.empty()) throw DataError(path + " holds no songs");
  return d;
}

// Keeps the dataset alive alongside the stream that points into it.
struct SplitData {
  ImageDataset images;
  PianoRollDataset songs;
  std::vector<std::size_t> permutation;
};

SplitData load_split(const TrainConfig& c, const std::string& split) {
  SplitData s;
  if (c.task == TaskName::PianoRoll) {
    s.songs = load_songs(c, split);
  } else {
    s.images = load_images(c, split);
    s.permutation = task_permutation(c, s.images);
  }
  return s;
}

BatchStream make_stream(const TrainConfig& c, const SplitData& s, std::optional<std::uint64_t> shuffle) {
  if (c.task == TaskName::PianoRoll) return BatchStream(s.songs, c.batch_size, shuffle);
  return BatchStream(s.images, serialize_mode(c.task), s.permutation, c.batch_size, shuffle);
}

BatchMetrics evaluate_stream(const SequenceModel& model, BatchStream& stream) {
  BatchMetrics total;
  stream.rewind();
  while (auto b = stream.next()) total += evaluate_batch(model, *b);
  return total;
}

double metric_of(const BatchMetrics& m, TaskKind task) {
  if (task == TaskKind::Prediction) return m.frames.accuracy();
  return m.count ? static_cast<double>(m.correct) / static_cast<double>(m.count) : 0.0;
}

void zero(SequenceModel& grad) {
  for (auto& p : grad.parameters()) std::fill(p.values.begin(), p.values.end(), 0.0);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string g17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string format_epoch_record(const EpochRecord& r, const std::string& config_hash) {
  std::ostringstream os;
  os << "epoch=" << r.epoch << " steps=" << r.steps << " train_loss=" << g17(r.train_loss)
     << " valid_loss=" << g17(r.valid_loss) << " valid_metric=" << g17(r.valid_metric)
     << " config=" << config_hash << " wall_s=" << std::fixed << std::setprecision(3)
     << r.wall_seconds;
  return os.str();
}

RunLog cmd_train(const TrainConfig& config, std::ostream& console) {
  const std::filesystem::path out_dir(config.out);
  std::filesystem::create_directories(out_dir);
  const std::string hash = config.hash();
  write_text(out_dir / "config.resolved", config.resolved());

  RunLog log;
  log.config_hash = hash;
  log.report = make_report(config.cell_topology(), config.baseline_topology());

  std::ofstream run_log(out_dir / "run.log", std::ios::app);
  if (!run_log) throw ConfigError("cannot write " + (out_dir / "run.log").string());
  const std::string header = "# config=" + hash + "\n" + format_report_record(log.report) + "\n";
  run_log << header << std::flush;
  console << header;

  SequenceModel model = init_model(config.model_shape(), config.seed);
  Checkpoint ckpt{hash, config.resolved(), 0, model, AdamState(config.adam)};
  if (config.epochs == 0) {
    save_checkpoint(out_dir / "last.ckpt", ckpt);
    save_checkpoint(out_dir / "best.ckpt", ckpt);
    return log;
  }

  const SplitData train = load_split(config, "train");
  const SplitData valid = load_split(config, "valid");
  std::string notes;
  if (config.task == TaskName::MnistPermuted) {
    std::ostringstream os;
    os << "# permutation_hash=" << std::hex << std::setw(16) << std::setfill('0')
       << permutation_hash(train.permutation) << "\n";
    notes += os.str();
  }
  if (config.task == TaskName::PianoRoll) {
    notes += "# nll=sum over notes, mean over all valid steps pooled across songs\n";
  }
  run_log << notes << std::flush;
  console << notes;
  BatchStream valid_stream = make_stream(config, valid, std::nullopt);
  const TaskKind task = config.task_kind();

  SequenceModel grad = model.zeros_like();
  AdamState adam(config.adam);
  std::size_t steps = 0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    BatchStream stream = make_stream(config, train, config.data_seed + kEpochSeedStep * epoch);
    BatchMetrics train_metrics;
    bool capped = false;
    while (auto batch = stream.next()) {
      zero(grad);
      const BatchMetrics m = loss_and_grad(model, *batch, grad);
      if (!std::isfinite(m.loss_sum)) {
        throw NumericError("non-finite training loss at step " + std::to_string(steps + 1));
      }
      train_metrics += m;
      auto g = grad.parameters();
      if (config.clip_norm > 0) clip_global_norm(g, config.clip_norm);
      adam_step(adam, model.parameters(), g);
      ++steps;
      if (config.max_steps && steps >= config.max_steps) {
        capped = true;
        break;
      }
    }
    const BatchMetrics v = evaluate_stream(model, valid_stream);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = steps;
    rec.train_loss = train_metrics.mean_loss();
    rec.valid_loss = v.mean_loss();
    rec.valid_metric = metric_of(v, task);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(rec);
    const std::string line = format_epoch_record(rec, hash);
    run_log << line << "\n" << std::flush;
    console << line << "\n";

    ckpt.epoch = epoch;
    ckpt.model = model;
    ckpt.adam = adam;
    save_checkpoint(out_dir / "last.ckpt", ckpt);
    if (rec.valid_loss < best) {
      best = rec.valid_loss;
      log.best_epoch = epoch;
      since_best = 0;
      save_checkpoint(out_dir / "best.ckpt", ckpt);
    } else if (config.patience && ++since_best >= config.patience) {
      break;
    }
    if (capped) break;
  }
  return log;
}

namespace {

void check_compatible(const SequenceModel& stored, const TrainConfig& config) {
  SequenceModel fresh = init_model(config.model_shape(), config.seed);
  SequenceModel copy = stored;
  const auto a = copy.parameters();
  const auto b = fresh.parameters();
  bool ok = stored.task == fresh.task && stored.cell.kind() == fresh.cell.kind() &&
            stored.cell.is_tt() == fresh.cell.is_tt() && a.size() == b.size();
  for (std::size_t i = 0; ok && i < a.size(); ++i) {
    ok = a[i].name == b[i].name && a[i].values.size() == b[i].values.size();
  }
  if (!ok) {
    const std::string stored_desc = std::string(stored.cell.is_tt() ? "TT-" : "") +
                                    (stored.cell.kind() == CellKind::SRNN ? "SRNN" : "GRU") + " " +
                                    std::to_string(stored.cell.input_dim()) + "->" +
                                    std::to_string(stored.cell.hidden_dim());
    throw CompatibilityError("checkpoint model " + stored_desc + " does not match config model " +
                             config.cell_topology().name());
  }
}

}  // namespace

EvalResult cmd_eval(const std::filesystem::path& checkpoint, const std::optional<TrainConfig>& config,
                    const std::string& split) {
  if (split != "valid" && split != "test") throw ConfigError("split must be valid or test");
  const Checkpoint ck = load_checkpoint(checkpoint);
  TrainConfig cfg = config ? *config : TrainConfig::parse(ck.config_text);
  check_compatible(ck.model, cfg);
  const SplitData data = load_split(cfg, split);
  BatchStream stream = make_stream(cfg, data, std::nullopt);
  const BatchMetrics m = evaluate_stream(ck.model, stream);
  return EvalResult{split, m.mean_loss(), metric_of(m, ck.model.task), m.count, ck.model.task};
}

std::string format_eval(const EvalResult& r, TaskKind task) {
  std::ostringstream os;
  os << "split=" << r.split << " count=" << r.count << " "
     << (task == TaskKind::Prediction ? "nll=" : "loss=") << g17(r.loss) << " "
     << (task == TaskKind::Prediction ? "frame_acc=" : "accuracy=") << g17(r.metric);
  return os.str();
}

std::string cmd_inspect(const std::filesystem::path& checkpoint) {
  Checkpoint ck = load_checkpoint(checkpoint);
  std::ostringstream os;
  const SequenceModel& m = ck.model;
  os << "checkpoint: " << checkpoint.string() << "\n";
  os << "config hash: " << ck.config_hash << "\n";
  os << "epoch: " << ck.epoch << "\n";
  os << "task: " << (m.task == TaskKind::Classification ? "classification" : "prediction") << "\n";
  os << "cell: " << (m.cell.kind() == CellKind::SRNN ? "srnn" : "gru")
     << (m.cell.is_tt() ? " (tensor-train)" : " (dense)") << ", input " << m.cell.input_dim()
     << ", hidden " << m.cell.hidden_dim() << "\n";

  auto describe = [&](const std::string& name, const LinearMap& map) {
    os << "  " << std::left << std::setw(12) << name << std::right;
    if (map.is_tt()) {
      const TTSpec& s = map.tt().spec;
      os << " tt  " << s.rows() << "x" << s.cols() << " rows " << s.row_modes().to_string()
         << " cols " << s.col_modes().to_string() << " ranks";
      for (std::size_t r : s.ranks()) os << " " << r;
    } else {
      os << " dense " << map.out_dim() << "x" << map.in_dim();
    }
    os << " params " << map.param_count() << "\n";
  };
  os << "layers:\n";
  describe("projection", m.projection);
  if (m.cell.kind() == CellKind::SRNN) {
    describe("w_xh", m.cell.srnn().w_xh);
    describe("w_hh", m.cell.srnn().w_hh);
  } else {
    const auto& g = m.cell.gru();
    describe("w_xr", g.w_xr);
    describe("w_hr", g.w_hr);
    describe("w_xz", g.w_xz);
    describe("w_hz", g.w_hz);
    describe("w_xh", g.w_xh);
    describe("w_hh", g.w_hh);
  }
  describe("output", m.output);
  os << "cell parameters: " << m.cell.param_count() << "\n";
  os << "total parameters: "
     << m.projection.param_count() + m.cell.param_count() + m.output.param_count() << "\n";
  try {
    const TrainConfig cfg = TrainConfig::parse(ck.config_text);
    const ModelReport r = make_report(cfg.cell_topology(), cfg.baseline_topology());
    os << "model: " << r.name << "\n";
    os << "baseline: " << r.baseline_name << " (" << r.baseline_param_count << " parameters)\n";
    os << "compression ratio: " << std::fixed << std::setprecision(2) << r.compression_ratio << "\n";
  } catch (const ConfigError&) {
    os << "compression ratio: unavailable (stored config unreadable)\n";
  }
  os << "optimizer state: " << (ck.adam ? "adam, step " + std::to_string(ck.adam->step) : "none")
     << "\n";
  return os.str();
}

std::string cmd_bench(const SweepConfig& config) {
  const auto points = run_scaling_sweep(config);
  std::ostringstream os;
  for (const auto& p : points) os << format_bench_point(p) << "\n";
  if (points.size() >= 3) {
    const SlopeFit fit = fit_forward_slope(points);
    os << "slope family=" << family_name(config.family) << " forward=" << std::setprecision(4)
       << fit.slope << " residual=" << fit.residual << "\n";
  }
  return os.str();
}

}  // namespace ttrnn

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ttrnn/config.hpp"
#include "ttrnn/tasks.hpp"

namespace ttrnn {

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_metric = 0.0;  // accuracy (classification) or frame ACC (prediction)
  double wall_seconds = 0.0;
};

struct RunLog {
  std::string config_hash;
  std::vector<EpochRecord> epochs;
  ModelReport report;
  std::size_t best_epoch = 0;
};

/// One log line, "key=value" fields. Floats are printed with 17 significant
/// digits so logs compare bit-exactly.
std::string format_epoch_record(const EpochRecord& record, const std::string& config_hash);

/// Trains per `config`, writing <out>/config.resolved, <out>/run.log,
/// <out>/last.ckpt and <out>/best.ckpt. With epochs = 0 only the report and
/// the initial checkpoint are written and no data is read.
RunLog cmd_train(const TrainConfig& config, std::ostream& console);

struct EvalResult {
  std::string split;
  double loss = 0.0;
  double metric = 0.0;
  std::size_t count = 0;
  TaskKind task = TaskKind::Classification;
};

/// Evaluates a checkpoint on "valid" or "test". Without an explicit config the
/// one stored in the checkpoint is used; a given config must describe the
/// same model shape or CompatibilityError is raised.
EvalResult cmd_eval(const std::filesystem::path& checkpoint, const std::optional<TrainConfig>& config,
                    const std::string& split);
std::string format_eval(const EvalResult& result, TaskKind task);

/// Human-readable structure dump with counts and compression ratio.
std::string cmd_inspect(const std::filesystem::path& checkpoint);

/// Runs a sweep and returns one line per point plus a slope line when the
/// sweep has at least three points.
std::string cmd_bench(const SweepConfig& config);

}  // namespace ttrnn

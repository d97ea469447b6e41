#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ttrnn/bench.hpp"
#include "ttrnn/data.hpp"
#include "ttrnn/optim.hpp"
#include "ttrnn/rnn_cells.hpp"
#include "ttrnn/tasks.hpp"

namespace ttrnn {

/// Flat "key = value" text, '#' starts a comment. Duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

enum class TaskName { MnistRow, MnistPixel, MnistPermuted, PianoRoll };

struct TrainConfig {
  TaskName task = TaskName::MnistRow;
  CellKind model = CellKind::GRU;
  bool tt = true;
  std::size_t hidden = 0;      // derived from hidden_modes for TT
  std::optional<ModeDims> hidden_modes;
  std::optional<ModeDims> input_modes;
  std::size_t rank = 3;
  std::size_t projection = 32;
  std::size_t baseline_hidden = 0;  // 0: same as hidden
  std::size_t baseline_input = 0;   // 0: same as projection

  AdamConfig adam;
  double clip_norm = 0.0;  // 0 disables clipping
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t max_steps = 0;  // 0: no cap
  std::size_t patience = 0;   // 0: early stopping off

  std::uint64_t seed = 1;
  std::uint64_t data_seed = 2;
  std::uint64_t perm_seed = 8888;

  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::size_t train_subset = 0;  // 0: all 50000 training images
  std::size_t valid_subset = 0;  // 0: all 10000 validation images

  std::string train_path;
  std::string valid_path;
  std::string test_path;
  bool synthetic = false;
  std::size_t synthetic_songs = 64;
  std::size_t synthetic_steps = 32;
  std::size_t synthetic_period = 8;

  std::string out = "run";

  /// Builds a config from parsed keys. Unknown keys and bad values raise
  /// ConfigError naming the field; TT modes must match the layer dims.
  static TrainConfig from_keys(const std::map<std::string, std::string>& keys);
  static TrainConfig load(const std::filesystem::path& path);
  static TrainConfig parse(const std::string& text);

  /// Canonical, sorted "key = value" lines; every seed is explicit.
  std::string resolved() const;
  /// FNV-1a 64 of resolved(), as 16 hex digits.
  std::string hash() const;

  CellTopology cell_topology() const;
  CellTopology baseline_topology() const;
  ModelShape model_shape() const;
  TaskKind task_kind() const;
};

std::string task_name(TaskName task);

/// Sweep description for the bench command: family = tt|dense, sizes = a
/// comma list (or min..max for powers of two), rank, mode, order, batch,
/// warmup, repetitions, seed.
SweepConfig sweep_from_keys(const std::map<std::string, std::string>& keys);

}  // namespace ttrnn

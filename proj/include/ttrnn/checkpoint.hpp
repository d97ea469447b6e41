#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ttrnn/optim.hpp"
#include "ttrnn/tasks.hpp"

namespace ttrnn {

struct Checkpoint {
  std::string config_hash;
  std::string config_text;  // resolved key = value dump
  std::uint64_t epoch = 0;
  SequenceModel model;
  std::optional<AdamState> adam;
};

// Container "TTRC", version 1, little-endian:
//   "TTRC" | u32 version | str hash | str config | u64 epoch | u8 task | u8 cell kind
//   | u32 entries | { str name | u8 tag | blob }* | u8 has_adam | adam
// where str = u32 length + bytes, tag 0 = dense map ("DNS1" blob), 1 = TT map
// ("TTM1" blob), 2 = vector (u32 length + f64 values).
void write_linear_map(std::ostream& out, const LinearMap& map);
LinearMap read_linear_map(std::istream& in);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ttrnn

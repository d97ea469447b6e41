#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttrnn/matrix.hpp"
#include "ttrnn/tasks.hpp"

namespace ttrnn {

/// Grayscale images with pixel values byte / 255.
struct ImageDataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;  // count * rows * cols, image-major, row-major within
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> image(std::size_t i) const {
    return {pixels.data() + i * rows * cols, rows * cols};
  }
  /// Images [first, first + count).
  ImageDataset slice(std::size_t first, std::size_t count) const;
};

/// Reads an IDX3 ubyte image file (magic 0x00000803) and IDX1 ubyte label file
/// (magic 0x00000801), both big-endian.
ImageDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
ImageDataset read_idx(std::istream& images, std::istream& labels);
/// Pixels are written as round(255 * v).
void write_idx(const ImageDataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels);

enum class SerializeMode { Row, Pixel, PermutedPixel };

/// Row: T = rows, N = cols. Pixel: T = rows * cols, N = 1. PermutedPixel: as
/// Pixel, step t reads pixel permutation[t] of the row-major flattening.
Matrix serialize_image(std::span<const double> image, std::size_t rows, std::size_t cols,
                       SerializeMode mode, std::span<const std::size_t> permutation = {});
std::vector<double> deserialize_image(const Matrix& sequence, std::size_t rows, std::size_t cols,
                                      SerializeMode mode,
                                      std::span<const std::size_t> permutation = {});

/// Fisher-Yates shuffle of 0..n-1 driven by Rng(seed).
std::vector<std::size_t> make_permutation(std::size_t n, std::uint64_t seed);
/// FNV-1a over the indices as little-endian uint64, for run logs.
std::uint64_t permutation_hash(std::span<const std::size_t> permutation);

inline constexpr std::size_t kNotes = 88;
inline constexpr int kLowestNote = 21;
inline constexpr int kHighestNote = 108;

/// Songs of T x 88 binary frames.
struct PianoRollDataset {
  std::vector<Matrix> songs;
};

// Text format: one frame per line as space-separated MIDI note numbers in
// [21, 108]; an empty line is a silent frame; a line holding only "---" ends
// a song; lines starting with '#' are comments.
PianoRollDataset read_pianoroll(const std::filesystem::path& path);
PianoRollDataset parse_pianoroll(std::istream& in);
void write_pianoroll(std::ostream& out, const PianoRollDataset& data);
void write_pianoroll(const std::filesystem::path& path, const PianoRollDataset& data);

/// Songs that cycle through eight fixed three-note chords; each song starts at
/// a seeded random phase.
PianoRollDataset synthetic_pianoroll(std::size_t songs, std::size_t steps, std::uint64_t seed,
                                     std::size_t period = 8);

/// Deterministic batch iterator. Order is shuffled with the seed when one is
/// given, otherwise kept. The last batch may be short.
class BatchStream {
 public:
  BatchStream(const ImageDataset& data, SerializeMode mode, std::vector<std::size_t> permutation,
              std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed);
  BatchStream(const PianoRollDataset& data, std::size_t batch_size,
              std::optional<std::uint64_t> shuffle_seed);

  std::size_t batch_count() const;
  std::size_t item_count() const { return order_.size(); }
  SequenceBatch batch(std::size_t index) const;
  std::optional<SequenceBatch> next();
  void rewind() { cursor_ = 0; }

 private:
  const ImageDataset* images_ = nullptr;
  const PianoRollDataset* songs_ = nullptr;
  SerializeMode mode_ = SerializeMode::Row;
  std::vector<std::size_t> permutation_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace ttrnn

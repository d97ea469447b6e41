#include "ttrnn/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ttrnn/error.hpp"
#include "ttrnn/rng.hpp"

namespace ttrnn {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& what, std::uint64_t offset) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (in.gcount() != 4) {
    throw FormatError(what + ": truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::vector<unsigned char> read_payload(std::istream& in, std::uint64_t bytes,
                                        std::uint64_t header, const std::string& what) {
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got != bytes) {
    throw FormatError(what + ": truncated payload at byte offset " + std::to_string(header + got) +
                    ", expected " + std::to_string(header + bytes) + " bytes");
  }
  return buf;
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

ImageDataset ImageDataset::slice(std::size_t first, std::size_t count) const {
  if (first > size() || count > size() - first) {
    throw RangeError("slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                     ") outside dataset of " + std::to_string(size()));
  }
  ImageDataset out;
  out.rows = rows;
  out.cols = cols;
  const std::size_t px = rows * cols;
  out.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(first * px),
                    pixels.begin() + static_cast<std::ptrdiff_t>((first + count) * px));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(first),
                    labels.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

ImageDataset read_idx(std::istream& images, std::istream& labels) {
  const std::uint32_t im_magic = read_be32(images, "image file", 0);
  if (im_magic != kImageMagic) {
    std::ostringstream os;
    os << "image file: bad magic 0x" << std::hex << im_magic << " at byte offset 0";
    throw FormatError(os.str());
  }
  const std::uint32_t count = read_be32(images, "image file", 4);
  const std::uint32_t rows = read_be32(images, "image file", 8);
  const std::uint32_t cols = read_be32(images, "image file", 12);
  if (rows == 0 || cols == 0) throw FormatError("image file: zero image dimension at byte offset 8");

  const std::uint32_t lb_magic = read_be32(labels, "label file", 0);
  if (lb_magic != kLabelMagic) {
    std::ostringstream os;
    os << "label file: bad magic 0x" << std::hex << lb_magic << " at byte offset 0";
    throw FormatError(os.str());
  }
  const std::uint32_t label_count = read_be32(labels, "label file", 4);
  if (label_count != count) {
    throw FormatError("image file holds " + std::to_string(count) + " images but label file holds " +
                    std::to_string(label_count) + " labels");
  }

  const std::uint64_t px = std::uint64_t{rows} * cols;
  const auto raw = read_payload(images, px * count, 16, "image file");
  const auto raw_labels = read_payload(labels, count, 8, "label file");

  ImageDataset out;
  out.rows = rows;
  out.cols = cols;
  out.pixels.resize(raw.size());
  std::transform(raw.begin(), raw.end(), out.pixels.begin(),
                 [](unsigned char b) { return static_cast<double>(b) / 255.0; });
  out.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (raw_labels[i] > 9) {
      throw FormatError("label file: label " + std::to_string(raw_labels[i]) +
                      " outside [0, 9] at byte offset " + std::to_string(8 + i));
    }
    out.labels[i] = raw_labels[i];
  }
  return out;
}

ImageDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  auto im = open_binary(images);
  auto lb = open_binary(labels);
  return read_idx(im, lb);
}

void write_idx(const ImageDataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  if (data.pixels.size() != data.size() * data.rows * data.cols) {
    throw ShapeError("pixel buffer does not match rows * cols * count");
  }
  std::ofstream im(images, std::ios::binary);
  std::ofstream lb(labels, std::ios::binary);
  if (!im || !lb) throw DataError("cannot write IDX files");
  write_be32(im, kImageMagic);
  write_be32(im, static_cast<std::uint32_t>(data.size()));
  write_be32(im, static_cast<std::uint32_t>(data.rows));
  write_be32(im, static_cast<std::uint32_t>(data.cols));
  for (double v : data.pixels) {
    const double b = std::clamp(std::round(v * 255.0), 0.0, 255.0);
    im.put(static_cast<char>(static_cast<unsigned char>(b)));
  }
  write_be32(lb, kLabelMagic);
  write_be32(lb, static_cast<std::uint32_t>(data.size()));
  for (int l : data.labels) lb.put(static_cast<char>(static_cast<unsigned char>(l)));
}

// ---------------------------------------------------------------------------

namespace {

void check_permutation(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) {
    throw ShapeError("permutation has " + std::to_string(perm.size()) + " entries, expected " +
                     std::to_string(n));
  }
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) throw DataError("permutation is not a bijection on 0.." + std::to_string(n - 1));
    seen[p] = true;
  }
}

}  // namespace

Matrix serialize_image(std::span<const double> image, std::size_t rows, std::size_t cols,
                       SerializeMode mode, std::span<const std::size_t> permutation) {
  const std::size_t n = rows * cols;
  if (image.size() != n) throw ShapeError("image size does not match rows * cols");
  switch (mode) {
    case SerializeMode::Row:
      return Matrix(rows, cols, std::vector<double>(image.begin(), image.end()));
    case SerializeMode::Pixel:
      return Matrix(n, 1, std::vector<double>(image.begin(), image.end()));
    case SerializeMode::PermutedPixel: {
      check_permutation(permutation, n);
      Matrix out(n, 1);
      for (std::size_t t = 0; t < n; ++t) out(t, 0) = image[permutation[t]];
      return out;
    }
  }
  throw ConfigError("unknown serialization mode");
}

std::vector<double> deserialize_image(const Matrix& sequence, std::size_t rows, std::size_t cols,
                                      SerializeMode mode, std::span<const std::size_t> permutation) {
  const std::size_t n = rows * cols;
  if (sequence.size() != n) throw ShapeError("sequence size does not match rows * cols");
  std::vector<double> out(sequence.values().begin(), sequence.values().end());
  if (mode == SerializeMode::PermutedPixel) {
    check_permutation(permutation, n);
    for (std::size_t t = 0; t < n; ++t) out[permutation[t]] = sequence.data()[t];
  }
  return out;
}

std::vector<std::size_t> make_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

std::uint64_t permutation_hash(std::span<const std::size_t> permutation) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t v : permutation) {
    auto x = static_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (x >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

PianoRollDataset parse_pianoroll(std::istream& in) {
  PianoRollDataset out;
  std::vector<std::vector<double>> frames;
  auto finish_song = [&]() {
    if (frames.empty()) return;
    Matrix song(frames.size(), kNotes);
    for (std::size_t t = 0; t < frames.size(); ++t)
      std::copy(frames[t].begin(), frames[t].end(), song.row(t).begin());
    out.songs.push_back(std::move(song));
    frames.clear();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    if (line == "---") {
      finish_song();
      continue;
    }
    std::vector<double> frame(kNotes, 0.0);
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      int note = 0;
      std::size_t used = 0;
      try {
        note = std::stoi(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || used == 0) {
        throw FormatError("line " + std::to_string(line_no) + ": '" + tok + "' is not a note number");
      }
      if (note < kLowestNote || note > kHighestNote) {
        throw FormatError("line " + std::to_string(line_no) + ": note " + std::to_string(note) +
                        " outside [" + std::to_string(kLowestNote) + ", " +
                        std::to_string(kHighestNote) + "]");
      }
      frame[static_cast<std::size_t>(note - kLowestNote)] = 1.0;
    }
    frames.push_back(std::move(frame));
  }
  finish_song();
  return out;
}

PianoRollDataset read_pianoroll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_pianoroll(in);
}

void write_pianoroll(std::ostream& out, const PianoRollDataset& data) {
  for (const Matrix& song : data.songs) {
    if (song.cols() != kNotes) throw ShapeError("piano-roll frames must have 88 notes");
    for (std::size_t t = 0; t < song.rows(); ++t) {
      bool first = true;
      for (std::size_t k = 0; k < kNotes; ++k) {
        if (song(t, k) < 0.5) continue;
        if (!first) out << ' ';
        out << static_cast<int>(k) + kLowestNote;
        first = false;
      }
      out << '\n';
    }
    out << "---\n";
  }
}

void write_pianoroll(const std::filesystem::path& path, const PianoRollDataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_pianoroll(out, data);
}

PianoRollDataset synthetic_pianoroll(std::size_t songs, std::size_t steps, std::uint64_t seed,
                                     std::size_t period) {
  if (period == 0 || period > 8) throw ConfigError("synthetic period must lie in [1, 8]");
  // Triads rooted on a C major scale starting at middle C.
  static constexpr std::array<std::array<int, 3>, 8> kChords{{{60, 64, 67},
                                                              {62, 65, 69},
                                                              {64, 67, 71},
                                                              {65, 69, 72},
                                                              {67, 71, 74},
                                                              {69, 72, 76},
                                                              {71, 74, 77},
                                                              {72, 76, 79}}};
  Rng rng(seed);
  PianoRollDataset out;
  out.songs.reserve(songs);
  for (std::size_t s = 0; s < songs; ++s) {
    const std::size_t phase = rng.below(period);
    Matrix song(steps, kNotes);
    for (std::size_t t = 0; t < steps; ++t) {
      for (int note : kChords[(phase + t) % period]) song(t, static_cast<std::size_t>(note - kLowestNote)) = 1.0;
    }
    out.songs.push_back(std::move(song));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> make_order(std::size_t n, std::optional<std::uint64_t> seed) {
  if (seed) return make_permutation(n, *seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

}  // namespace

BatchStream::BatchStream(const ImageDataset& data, SerializeMode mode,
                         std::vector<std::size_t> permutation, std::size_t batch_size,
                         std::optional<std::uint64_t> shuffle_seed)
    : images_(&data), mode_(mode), permutation_(std::move(permutation)), batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (data.size() == 0) throw DataError("empty image dataset");
  if (mode == SerializeMode::PermutedPixel) check_permutation(permutation_, data.rows * data.cols);
  order_ = make_order(data.size(), shuffle_seed);
}

BatchStream::BatchStream(const PianoRollDataset& data, std::size_t batch_size,
                         std::optional<std::uint64_t> shuffle_seed)
    : songs_(&data), batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (data.songs.empty()) throw DataError("empty piano-roll dataset");
  for (std::size_t s = 0; s < data.songs.size(); ++s) {
    if (data.songs[s].rows() < 2) {
      throw DataError("song " + std::to_string(s) + " has fewer than two frames");
    }
    if (data.songs[s].cols() != kNotes) throw ShapeError("piano-roll frames must have 88 notes");
  }
  order_ = make_order(data.songs.size(), shuffle_seed);
}

std::size_t BatchStream::batch_count() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

SequenceBatch BatchStream::batch(std::size_t index) const {
  if (index >= batch_count()) throw RangeError("batch index " + std::to_string(index) + " out of range");
  const std::size_t first = index * batch_size_;
  const std::size_t count = std::min(batch_size_, order_.size() - first);
  SequenceBatch b;

  if (images_) {
    const std::size_t rows = images_->rows;
    const std::size_t cols = images_->cols;
    const bool by_row = mode_ == SerializeMode::Row;
    const std::size_t steps = by_row ? rows : rows * cols;
    const std::size_t width = by_row ? cols : 1;
    b.inputs.assign(steps, Matrix(count, width));
    b.mask = Matrix(count, steps, 1.0);
    b.labels.resize(count);
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t item = order_[first + r];
      const Matrix seq = serialize_image(images_->image(item), rows, cols, mode_, permutation_);
      for (std::size_t t = 0; t < steps; ++t)
        std::copy(seq.row(t).begin(), seq.row(t).end(), b.inputs[t].row(r).begin());
      b.labels[r] = images_->labels[item];
    }
    return b;
  }

  std::size_t steps = 0;
  for (std::size_t r = 0; r < count; ++r)
    steps = std::max(steps, songs_->songs[order_[first + r]].rows() - 1);
  b.inputs.assign(steps, Matrix(count, kNotes));
  b.targets.assign(steps, Matrix(count, kNotes));
  b.mask = Matrix(count, steps);
  for (std::size_t r = 0; r < count; ++r) {
    const Matrix& song = songs_->songs[order_[first + r]];
    for (std::size_t t = 0; t + 1 < song.rows(); ++t) {
      std::copy(song.row(t).begin(), song.row(t).end(), b.inputs[t].row(r).begin());
      std::copy(song.row(t + 1).begin(), song.row(t + 1).end(), b.targets[t].row(r).begin());
      b.mask(r, t) = 1.0;
    }
  }
  return b;
}

std::optional<SequenceBatch> BatchStream::next() {
  if (cursor_ >= batch_count()) return std::nullopt;
  return batch(cursor_++);
}

}  // namespace ttrnn

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ttrnn/error.hpp"

// Little-endian primitives shared by the checkpoint containers.
namespace ttrnn::binio {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

template <typename T>
void write(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  return to_little(v);
}

// Throws FormatError when a seekable stream holds fewer than `bytes` more
// bytes, so corrupt length fields fail before any large allocation.
inline void require_bytes(std::istream& in, std::uint64_t bytes, const char* what) {
  const auto here = in.tellg();
  if (here < 0) return;
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (end >= here && static_cast<std::uint64_t>(end - here) < bytes) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
}

inline void write_u32(std::ostream& out, std::uint64_t v) {
  if (v > UINT32_MAX) throw FormatError("value does not fit in uint32: " + std::to_string(v));
  write<std::uint32_t>(out, static_cast<std::uint32_t>(v));
}

inline void write_doubles(std::ostream& out, std::span<const double> values) {
  for (double v : values) write<double>(out, v);
}

inline void read_doubles(std::istream& in, std::span<double> values, const char* what) {
  for (double& v : values) v = read<double>(in, what);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
  const auto n = read<std::uint32_t>(in, what);
  if (n > (1u << 28)) throw FormatError(std::string("implausible string length in ") + what);
  require_bytes(in, n, what);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw FormatError(std::string("truncated string in ") + what);
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw FormatError(std::string("bad magic for ") + what + ", expected \"" + magic + "\"");
  }
}

}  // namespace ttrnn::binio

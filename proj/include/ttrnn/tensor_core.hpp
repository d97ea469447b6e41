#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace ttrnn {

/// Mode factorization n_1..n_d of a matrix dimension. Every mode is >= 1 and
/// the product fits in 64 bits.
class ModeDims {
 public:
  ModeDims() = default;
  explicit ModeDims(std::vector<std::size_t> dims);
  ModeDims(std::initializer_list<std::size_t> dims) : ModeDims(std::vector<std::size_t>(dims)) {}

  std::size_t order() const { return dims_.size(); }
  std::size_t operator[](std::size_t k) const { return dims_[k]; }
  std::uint64_t product() const { return product_; }
  std::size_t max() const;
  const std::vector<std::size_t>& values() const { return dims_; }
  auto begin() const { return dims_.begin(); }
  auto end() const { return dims_.end(); }

  /// "10x10" style rendering, also accepted by parse().
  std::string to_string() const;
  static ModeDims parse(const std::string& text);

  friend bool operator==(const ModeDims& a, const ModeDims& b) { return a.dims_ == b.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::uint64_t product_ = 1;
};

/// 1-based multi-index (j_1..j_d).
struct MultiIndex {
  std::vector<std::size_t> idx;

  std::size_t operator[](std::size_t k) const { return idx[k]; }
  std::size_t size() const { return idx.size(); }
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

// Row-major bijection between {1..prod(dims)} and multi-indices; the last
// mode varies fastest. Out-of-range input throws RangeError.
MultiIndex linear_to_multi(std::uint64_t p, const ModeDims& dims);
std::uint64_t multi_to_linear(const MultiIndex& index, const ModeDims& dims);

}  // namespace ttrnn

#include "ttrnn/tensor_core.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

#include "ttrnn/error.hpp"

namespace ttrnn {

ModeDims::ModeDims(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ShapeError("mode factorization needs at least one mode");
  product_ = 1;
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("mode sizes must be positive");
    if (product_ > std::numeric_limits<std::uint64_t>::max() / d) {
      throw ShapeError("mode product overflows 64 bits");
    }
    product_ *= d;
  }
}

std::size_t ModeDims::max() const { return *std::max_element(dims_.begin(), dims_.end()); }

std::string ModeDims::to_string() const {
  std::string s;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (k) s += 'x';
    s += std::to_string(dims_[k]);
  }
  return s;
}

ModeDims ModeDims::parse(const std::string& text) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of("x,", start);
    if (end == std::string::npos) end = text.size();
    std::size_t value = 0;
    const char* first = text.data() + start;
    const char* last = text.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) {
      throw ShapeError("cannot parse mode list '" + text + "'");
    }
    dims.push_back(value);
    start = end + 1;
  }
  return ModeDims(std::move(dims));
}

MultiIndex linear_to_multi(std::uint64_t p, const ModeDims& dims) {
  if (p < 1 || p > dims.product()) {
    throw RangeError("linear index " + std::to_string(p) + " outside [1, " +
                     std::to_string(dims.product()) + "]");
  }
  MultiIndex out{std::vector<std::size_t>(dims.order())};
  std::uint64_t rest = p - 1;
  for (std::size_t k = dims.order(); k-- > 0;) {
    out.idx[k] = static_cast<std::size_t>(rest % dims[k]) + 1;
    rest /= dims[k];
  }
  return out;
}

std::uint64_t multi_to_linear(const MultiIndex& index, const ModeDims& dims) {
  if (index.size() != dims.order()) {
    throw RangeError("multi-index has " + std::to_string(index.size()) + " entries, expected " +
                     std::to_string(dims.order()));
  }
  std::uint64_t linear = 0;
  for (std::size_t k = 0; k < dims.order(); ++k) {
    if (index[k] < 1 || index[k] > dims[k]) {
      throw RangeError("multi-index entry " + std::to_string(k) + " = " + std::to_string(index[k]) +
                       " outside [1, " + std::to_string(dims[k]) + "]");
    }
    linear = linear * dims[k] + (index[k] - 1);
  }
  return linear + 1;
}

}  // namespace ttrnn

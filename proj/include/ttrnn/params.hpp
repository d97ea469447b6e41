#pragma once

#include <span>
#include <string>
#include <vector>

namespace ttrnn {

/// A named, mutable window onto one parameter tensor. Models expose their
/// parameters as an ordered list of these; a gradient object of the same
/// type exposes an identically ordered list, so the two zip element-wise.
struct ParamView {
  std::string name;
  std::span<double> values;
};

using ParamList = std::vector<ParamView>;

inline void append_prefixed(ParamList& out, const std::string& prefix, ParamList items) {
  for (auto& item : items) {
    out.push_back({prefix + item.name, item.values});
  }
}

}  // namespace ttrnn

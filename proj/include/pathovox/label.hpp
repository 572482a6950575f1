#pragma once

#include <string>
#include <string_view>

#include "pathovox/errors.hpp"

namespace pathovox {

/// Class convention, fixed project-wide: index 0 = pathological,
/// index 1 = healthy. Sensitivity is the recall of class 0.
enum class Label : int { pathological = 0, healthy = 1 };

inline std::string to_string(Label label) {
  return label == Label::pathological ? "pathological" : "healthy";
}

inline Label parse_label(std::string_view text) {
  if (text == "pathological") return Label::pathological;
  if (text == "healthy") return Label::healthy;
  throw UnknownLabel("unknown label: " + std::string(text));
}

}  // namespace pathovox

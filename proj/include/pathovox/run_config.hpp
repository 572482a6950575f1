#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "pathovox/audio.hpp"
#include "pathovox/dataset.hpp"
#include "pathovox/model.hpp"
#include "pathovox/trainer.hpp"

namespace pathovox {

/// Flat key=value run configuration covering framing, architecture,
/// training schedule and split fractions. Defaults are the reference
/// values; unknown keys are rejected. Lines starting with '#' are
/// comments.
struct RunConfig {
  FrameConfig frame;
  ModelConfig model;
  TrainConfig train;
  SplitSpec split;

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(std::istream& in, const std::string& origin);

  /// All randomness (init, shuffling, dropout, splitting) flows from this.
  void set_seed(std::uint64_t seed);

  /// key=value lines in canonical order; parse(echo(x)) == x.
  std::string echo() const;

  void validate() const;
};

}  // namespace pathovox

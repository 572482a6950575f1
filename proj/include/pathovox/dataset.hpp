#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pathovox/label.hpp"

namespace pathovox {

enum class Split { train, val, test };

std::string to_string(Split split);
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string file_path;
  Label label = Label::healthy;
  std::optional<Split> split;
  bool operator==(const ManifestEntry&) const = default;
};

using Manifest = std::vector<ManifestEntry>;

struct SplitSpec {
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidConfig
};

/// Balanced split: with H = healthy count, train takes floor(train_fraction*H)
/// files of EACH class and val takes floor(val_fraction*H) of each, sampled
/// without replacement with the spec's seed; everything left of both classes
/// lands in test. Entry order is preserved. Throws EmptyClass when a class is
/// missing and InsufficientHealthy when a class cannot supply the counts.
Manifest make_split(const Manifest& entries, const SplitSpec& spec);

struct SplitCounts {
  std::size_t train_healthy = 0, train_pathological = 0;
  std::size_t val_healthy = 0, val_pathological = 0;
  std::size_t test_healthy = 0, test_pathological = 0;
};
SplitCounts count_by_split(const Manifest& manifest);

/// CSV with header `file_path,label,split`; split may be empty.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Synthesis parameters for the stand-in corpus: each file is a sum of
/// the first five harmonics of a fundamental drawn from [min_f0, max_f0].
/// Pathological files add cycle-to-cycle pitch perturbation (jitter),
/// per-cycle amplitude modulation (shimmer) and stronger broadband noise.
struct SynthSpec {
  std::size_t n_healthy = 0;
  std::size_t n_pathological = 0;
  int sample_rate_hz = 8000;
  double min_duration_s = 0.5;
  double max_duration_s = 1.0;
  double min_f0_hz = 100.0;
  double max_f0_hz = 220.0;
  double jitter = 0.12;
  double shimmer = 0.5;
  double noise_amplitude = 0.18;
  double healthy_noise_amplitude = 0.004;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Writes the corpus as 16-bit PCM WAVs plus manifest.csv into out_dir
/// and returns the manifest (paths relative to out_dir). Deterministic
/// given the seed.
Manifest generate_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace pathovox

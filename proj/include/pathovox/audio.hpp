#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pathovox/errors.hpp"

namespace pathovox {

/// Mono audio normalized to [-1, 1) (16-bit PCM divided by 32768).
struct Signal {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  std::string source_path;
};

enum class WindowKind { hamming, rectangular };

/// Framing parameters. Defaults: 64 ms Hamming frames with 30 ms overlap.
struct FrameConfig {
  double frame_ms = 64.0;
  double overlap_ms = 30.0;
  WindowKind window = WindowKind::hamming;

  /// Throws InvalidConfig unless 0 < overlap_ms < frame_ms.
  void validate() const;

  /// Frame length in samples at the given rate (3200 at 50 kHz defaults).
  std::size_t frame_len(int sample_rate_hz) const;
  /// Hop between consecutive frame starts (1700 at 50 kHz defaults).
  std::size_t hop_len(int sample_rate_hz) const;
};

/// n windowed frames of frame_len samples each, stored row-major.
struct SegmentMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  const double* row(std::size_t r) const { return values.data() + r * cols; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// w[k] = 0.54 - 0.46 cos(2 pi k / (N-1)). Throws InvalidLength for N < 2.
std::vector<double> hamming_window(std::size_t n);

/// Reads a RIFF/WAVE file: PCM, 16-bit, mono only; other chunks skipped.
/// Errors: MalformedHeader, UnsupportedFormat, EmptyAudio, IoError.
Signal read_wav(const std::filesystem::path& path);

/// Writes samples as 16-bit PCM mono, clamping to [-1, 1).
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz);

/// Splits the signal into hop-spaced frames, each multiplied by the window.
/// The trailing partial frame is discarded. Throws TooShort if the signal
/// holds less than one frame.
SegmentMatrix segment(const Signal& signal, const FrameConfig& cfg);

}  // namespace pathovox

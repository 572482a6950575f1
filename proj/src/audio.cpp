#include "pathovox/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

namespace pathovox {

namespace {

constexpr double kPcmScale = 1.0 / 32768.0;

std::uint32_t read_u32le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16le(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16le(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

void FrameConfig::validate() const {
  if (!(frame_ms > 0.0) || !(overlap_ms > 0.0) || !(overlap_ms < frame_ms))
    throw InvalidConfig("frame config requires 0 < overlap_ms < frame_ms");
}

std::size_t FrameConfig::frame_len(int sample_rate_hz) const {
  validate();
  if (sample_rate_hz <= 0) throw InvalidConfig("sample rate must be positive");
  return static_cast<std::size_t>(std::llround(frame_ms * sample_rate_hz / 1000.0));
}

std::size_t FrameConfig::hop_len(int sample_rate_hz) const {
  const std::size_t frame = frame_len(sample_rate_hz);
  const auto overlap =
      static_cast<std::size_t>(std::llround(overlap_ms * sample_rate_hz / 1000.0));
  if (overlap >= frame) throw InvalidConfig("overlap must be shorter than the frame");
  return frame - overlap;
}

std::vector<double> hamming_window(std::size_t n) {
  if (n < 2) throw InvalidLength("hamming window needs at least 2 points");
  std::vector<double> w(n);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 0.54 - 0.46 * std::cos(step * static_cast<double>(k));
  return w;
}

Signal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RIFF", 4) != 0)
    throw MalformedHeader(path.string() + ": missing RIFF magic");
  read_u32le(in);  // riff size, unused
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "WAVE", 4) != 0)
    throw MalformedHeader(path.string() + ": missing WAVE magic");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<double> samples;
  bool have_data = false;

  while (in.peek() != std::char_traits<char>::eof()) {
    char id[4];
    in.read(id, 4);
    const std::uint32_t size = read_u32le(in);
    if (!in) throw MalformedHeader(path.string() + ": truncated chunk header");

    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw MalformedHeader(path.string() + ": fmt chunk too small");
      const std::uint16_t format = read_u16le(in);
      channels = read_u16le(in);
      rate = read_u32le(in);
      read_u32le(in);  // byte rate
      read_u16le(in);  // block align
      bits = read_u16le(in);
      in.seekg(size - 16 + (size & 1), std::ios::cur);
      if (format != 1) throw UnsupportedFormat(path.string() + ": only PCM (format 1) supported");
      if (channels != 1) throw UnsupportedFormat(path.string() + ": only mono supported");
      if (bits != 16) throw UnsupportedFormat(path.string() + ": only 16-bit samples supported");
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw MalformedHeader(path.string() + ": data chunk precedes fmt chunk");
      const std::size_t count = size / 2;
      samples.resize(count);
      std::vector<unsigned char> raw(size);
      in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(size));
      if (!in) throw MalformedHeader(path.string() + ": data chunk truncated");
      for (std::size_t i = 0; i < count; ++i) {
        const auto v = static_cast<std::int16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
        samples[i] = static_cast<double>(v) * kPcmScale;
      }
      if (size & 1) in.seekg(1, std::ios::cur);
      have_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
      if (!in) throw MalformedHeader(path.string() + ": truncated chunk body");
    }
  }

  if (!have_fmt || !have_data) throw MalformedHeader(path.string() + ": missing fmt or data chunk");
  if (samples.empty()) throw EmptyAudio(path.string() + ": zero data frames");

  Signal s;
  s.samples = std::move(samples);
  s.sample_rate_hz = static_cast<int>(rate);
  s.source_path = path.string();
  return s;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz) {
  if (sample_rate_hz <= 0) throw InvalidConfig("sample rate must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());

  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  write_u32le(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32le(out, 16);
  write_u16le(out, 1);  // PCM
  write_u16le(out, 1);  // mono
  write_u32le(out, static_cast<std::uint32_t>(sample_rate_hz));
  write_u32le(out, static_cast<std::uint32_t>(sample_rate_hz * 2));
  write_u16le(out, 2);
  write_u16le(out, 16);
  out.write("data", 4);
  write_u32le(out, data_bytes);
  for (const double v : samples) {
    const double scaled = std::floor(v * 32768.0);
    const auto clamped =
        static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    write_u16le(out, static_cast<std::uint16_t>(clamped));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

SegmentMatrix segment(const Signal& signal, const FrameConfig& cfg) {
  cfg.validate();
  const std::size_t frame = cfg.frame_len(signal.sample_rate_hz);
  const std::size_t hop = cfg.hop_len(signal.sample_rate_hz);
  const std::size_t length = signal.samples.size();
  if (length < frame)
    throw TooShort(signal.source_path + ": signal shorter than one frame (" +
                   std::to_string(length) + " < " + std::to_string(frame) + " samples)");

  const std::size_t n = (length - frame) / hop + 1;
  std::vector<double> window;
  if (cfg.window == WindowKind::hamming) window = hamming_window(frame);

  SegmentMatrix m;
  m.rows = n;
  m.cols = frame;
  m.values.resize(n * frame);
  for (std::size_t r = 0; r < n; ++r) {
    const double* src = signal.samples.data() + r * hop;
    double* dst = m.values.data() + r * frame;
    if (window.empty()) {
      std::copy(src, src + frame, dst);
    } else {
      for (std::size_t k = 0; k < frame; ++k) dst[k] = src[k] * window[k];
    }
  }
  return m;
}

}  // namespace pathovox

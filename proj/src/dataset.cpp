#include "pathovox/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pathovox/audio.hpp"
#include "pathovox/rng.hpp"

namespace pathovox {

namespace {

constexpr int kHarmonics = 5;

std::size_t floor_fraction(double fraction, std::size_t count) {
  // tiny nudge so exact products like 0.70 * 10 are not floored away
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) + 1e-9));
}

std::string synth_file_name(Label label, std::size_t index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.wav", to_string(label).c_str(), index);
  return buf;
}

std::vector<double> synth_voice(const SynthSpec& spec, Label label, Rng& rng) {
  const double duration = rng.uniform(spec.min_duration_s, spec.max_duration_s);
  const double base_f0 = rng.uniform(spec.min_f0_hz, spec.max_f0_hz);
  const auto n = static_cast<std::size_t>(std::llround(duration * spec.sample_rate_hz));

  // harmonic amplitudes 1/h, scaled so the worst-case sum stays below 1
  // even with shimmer and noise on top
  double harmonic_norm = 0.0;
  for (int h = 1; h <= kHarmonics; ++h) harmonic_norm += 1.0 / h;
  const double base_amp = 0.5 / harmonic_norm;

  double phases[kHarmonics];
  for (double& p : phases) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  const bool pathological = label == Label::pathological;
  const double noise_amp = pathological ? spec.noise_amplitude : spec.healthy_noise_amplitude;

  std::vector<double> samples(n);
  double phase = 0.0;
  double cycle_f0 = base_f0;
  double cycle_amp = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    double s = 0.0;
    for (int h = 1; h <= kHarmonics; ++h)
      s += base_amp / h * std::sin(h * phase + phases[h - 1]);
    s *= cycle_amp;
    s += noise_amp * rng.uniform(-1.0, 1.0);
    samples[t] = s;

    phase += 2.0 * std::numbers::pi * cycle_f0 / spec.sample_rate_hz;
    if (phase >= 2.0 * std::numbers::pi) {
      phase -= 2.0 * std::numbers::pi;
      if (pathological) {
        cycle_f0 = base_f0 * (1.0 + spec.jitter * rng.uniform(-1.0, 1.0));
        cycle_amp = 1.0 + spec.shimmer * rng.uniform(-1.0, 1.0);
      }
    }
  }
  return samples;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw MalformedRow("unknown split: " + std::string(text));
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0) || !(val_fraction > 0.0))
    throw InvalidConfig("split fractions must be positive");
  if (!(train_fraction + val_fraction < 1.0))
    throw InvalidConfig("train and val fractions must sum to less than 1");
}

Manifest make_split(const Manifest& entries, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> healthy, pathological;
  for (std::size_t i = 0; i < entries.size(); ++i)
    (entries[i].label == Label::healthy ? healthy : pathological).push_back(i);
  if (healthy.empty()) throw EmptyClass("no healthy entries");
  if (pathological.empty()) throw EmptyClass("no pathological entries");

  const std::size_t n_train = floor_fraction(spec.train_fraction, healthy.size());
  const std::size_t n_val = floor_fraction(spec.val_fraction, healthy.size());
  if (n_train + n_val > pathological.size())
    throw InsufficientHealthy("pathological class cannot match " + std::to_string(n_train) +
                              "+" + std::to_string(n_val) + " balanced files");

  Manifest out = entries;
  Rng rng(spec.seed);
  for (auto* indices : {&healthy, &pathological}) {
    rng.shuffle(*indices);
    for (std::size_t i = 0; i < indices->size(); ++i) {
      Split s = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
      out[(*indices)[i]].split = s;
    }
  }
  return out;
}

SplitCounts count_by_split(const Manifest& manifest) {
  SplitCounts c;
  for (const ManifestEntry& e : manifest) {
    if (!e.split) continue;
    const bool healthy = e.label == Label::healthy;
    switch (*e.split) {
      case Split::train: (healthy ? c.train_healthy : c.train_pathological) += 1; break;
      case Split::val: (healthy ? c.val_healthy : c.val_pathological) += 1; break;
      case Split::test: (healthy ? c.test_healthy : c.test_pathological) += 1; break;
    }
  }
  return c;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw MalformedRow(path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "file_path,label,split")
    throw MalformedRow(path.string() + ": expected header file_path,label,split");

  Manifest manifest;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t first = line.find(',');
    const std::size_t second = first == std::string::npos ? std::string::npos
                                                          : line.find(',', first + 1);
    if (first == std::string::npos || second == std::string::npos ||
        line.find(',', second + 1) != std::string::npos)
      throw MalformedRow(path.string() + ":" + std::to_string(line_no) +
                         ": expected 3 comma-separated fields");
    ManifestEntry entry;
    entry.file_path = line.substr(0, first);
    if (entry.file_path.empty())
      throw MalformedRow(path.string() + ":" + std::to_string(line_no) + ": empty file path");
    entry.label = parse_label(line.substr(first + 1, second - first - 1));
    const std::string split_text = line.substr(second + 1);
    if (!split_text.empty()) entry.split = parse_split(split_text);
    manifest.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create manifest " + path.string());
  out << "file_path,label,split\n";
  for (const ManifestEntry& e : manifest) {
    out << e.file_path << ',' << to_string(e.label) << ','
        << (e.split ? to_string(*e.split) : "") << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

void SynthSpec::validate() const {
  if (sample_rate_hz <= 0) throw InvalidConfig("synth sample rate must be positive");
  if (!(min_duration_s > 0.0) || !(max_duration_s >= min_duration_s))
    throw InvalidConfig("synth duration range is invalid");
  if (!(min_f0_hz > 0.0) || !(max_f0_hz >= min_f0_hz))
    throw InvalidConfig("synth f0 range is invalid");
  if (jitter < 0.0 || shimmer < 0.0 || noise_amplitude < 0.0 || healthy_noise_amplitude < 0.0)
    throw InvalidConfig("synth perturbation amplitudes must be non-negative");
}

Manifest generate_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  const Rng base(spec.seed);
  const auto make_class = [&](Label label, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      Rng rng = base.fork((static_cast<std::uint64_t>(label) << 32) | i);
      const std::vector<double> samples = synth_voice(spec, label, rng);
      const std::string name = synth_file_name(label, i);
      write_wav(out_dir / name, samples, spec.sample_rate_hz);
      manifest.push_back({name, label, std::nullopt});
    }
  };
  make_class(Label::healthy, spec.n_healthy);
  make_class(Label::pathological, spec.n_pathological);
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace pathovox

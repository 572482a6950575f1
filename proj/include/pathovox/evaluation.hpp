#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "pathovox/label.hpp"

namespace pathovox {

/// 2x2 counts: rows are the TRUE class, columns the PREDICTED class,
/// index 0 = pathological, 1 = healthy.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 2>, 2> counts{{{0, 0}, {0, 0}}};

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t r) const { return counts[r][0] + counts[r][1]; }
  std::uint64_t col_sum(std::size_t c) const { return counts[0][c] + counts[1][c]; }
  void add(Label truth, Label predicted) {
    counts[static_cast<int>(truth)][static_cast<int>(predicted)] += 1;
  }
  /// Elementwise merge; matrices from parallel evaluation fan-in add up.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix accumulate(std::span<const std::pair<Label, Label>> true_pred_pairs);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // a zero denominator was reported as 0
  bool operator==(const ClassMetrics&) const = default;
};

struct ClassificationReport {
  ClassMetrics pathological;
  ClassMetrics healthy;
  double accuracy = 0.0;
  double sensitivity = 0.0;  // recall of pathological
  double specificity = 0.0;  // recall of healthy
  ConfusionMatrix matrix;
  bool operator==(const ClassificationReport&) const = default;
};

/// Derives all metrics from the counts. Throws EmptyMatrix for total 0.
ClassificationReport report(const ConfusionMatrix& matrix);

enum class ReportFormat { text, json };

/// Text table mirroring the per-class precision/recall/f1 layout plus
/// the overall percentages, or the JSON schema consumed by tooling.
std::string render_report(const ClassificationReport& rep, ReportFormat format);

/// Parses render_report(..., json) back; round-trips exactly.
ClassificationReport parse_report_json(const std::string& text);

/// Half-up rounding used for display (2 decimals for ratios and
/// percentages).
double round_half_up(double value, int decimals);

}  // namespace pathovox

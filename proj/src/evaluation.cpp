#include "pathovox/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace pathovox {

namespace {

using nlohmann::json;

struct Ratio {
  double value;
  bool degenerate;
};

Ratio ratio(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0) return {0.0, true};
  return {static_cast<double>(numerator) / static_cast<double>(denominator), false};
}

std::string percent(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << round_half_up(v * 100.0, 2) << " %";
  return out.str();
}

std::string fixed2(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << round_half_up(v, 2);
  return out.str();
}

json class_to_json(const ClassMetrics& m) {
  json j = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  j["degenerate"] = m.degenerate;
  return j;
}

ClassMetrics class_from_json(const json& j) {
  ClassMetrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.degenerate = j.value("degenerate", false);
  return m;
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) counts[r][c] += other.counts[r][c];
  return *this;
}

ConfusionMatrix accumulate(std::span<const std::pair<Label, Label>> true_pred_pairs) {
  ConfusionMatrix m;
  for (const auto& [truth, predicted] : true_pred_pairs) m.add(truth, predicted);
  return m;
}

ClassificationReport report(const ConfusionMatrix& matrix) {
  if (matrix.total() == 0) throw EmptyMatrix("confusion matrix is empty");

  ClassificationReport rep;
  rep.matrix = matrix;
  for (std::size_t c = 0; c < 2; ++c) {
    const Ratio precision = ratio(matrix.counts[c][c], matrix.col_sum(c));
    const Ratio recall = ratio(matrix.counts[c][c], matrix.row_sum(c));
    ClassMetrics m;
    m.precision = precision.value;
    m.recall = recall.value;
    m.degenerate = precision.degenerate || recall.degenerate;
    const double pr = m.precision + m.recall;
    m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    (c == 0 ? rep.pathological : rep.healthy) = m;
  }
  // exact integer arithmetic up to the single final division
  rep.accuracy = static_cast<double>(matrix.counts[0][0] + matrix.counts[1][1]) /
                 static_cast<double>(matrix.total());
  rep.sensitivity = rep.pathological.recall;
  rep.specificity = rep.healthy.recall;
  return rep;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5) / scale;
}

std::string render_report(const ClassificationReport& rep, ReportFormat format) {
  if (format == ReportFormat::json) {
    json j;
    j["accuracy"] = rep.accuracy;
    j["sensitivity"] = rep.sensitivity;
    j["specificity"] = rep.specificity;
    j["classes"] = {{"pathological", class_to_json(rep.pathological)},
                    {"healthy", class_to_json(rep.healthy)}};
    j["matrix"] = {{rep.matrix.counts[0][0], rep.matrix.counts[0][1]},
                   {rep.matrix.counts[1][0], rep.matrix.counts[1][1]}};
    j["total"] = rep.matrix.total();
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  out << std::left << std::setw(14) << "class" << std::right << std::setw(10) << "precision"
      << std::setw(8) << "recall" << std::setw(10) << "f1-score" << '\n';
  const auto row = [&out](const char* name, const ClassMetrics& m) {
    out << std::left << std::setw(14) << name << std::right << std::setw(10)
        << fixed2(m.precision) << std::setw(8) << fixed2(m.recall) << std::setw(10)
        << fixed2(m.f1) << (m.degenerate ? "  (degenerate)" : "") << '\n';
  };
  row("pathological", rep.pathological);
  row("healthy", rep.healthy);
  out << '\n';
  out << "accuracy:     " << percent(rep.accuracy) << '\n';
  out << "sensitivity:  " << percent(rep.sensitivity) << '\n';
  out << "specificity:  " << percent(rep.specificity) << '\n';
  out << '\n';
  out << "confusion matrix (rows = true class, columns = predicted):" << '\n';
  out << std::left << std::setw(20) << "" << std::right << std::setw(14) << "pathological"
      << std::setw(14) << "healthy" << '\n';
  out << std::left << std::setw(20) << "true pathological" << std::right << std::setw(14)
      << rep.matrix.counts[0][0] << std::setw(14) << rep.matrix.counts[0][1] << '\n';
  out << std::left << std::setw(20) << "true healthy" << std::right << std::setw(14)
      << rep.matrix.counts[1][0] << std::setw(14) << rep.matrix.counts[1][1] << '\n';
  return out.str();
}

ClassificationReport parse_report_json(const std::string& text) {
  json j = json::parse(text);
  ClassificationReport rep;
  rep.accuracy = j.at("accuracy").get<double>();
  rep.sensitivity = j.at("sensitivity").get<double>();
  rep.specificity = j.at("specificity").get<double>();
  rep.pathological = class_from_json(j.at("classes").at("pathological"));
  rep.healthy = class_from_json(j.at("classes").at("healthy"));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      rep.matrix.counts[r][c] = j.at("matrix").at(r).at(c).get<std::uint64_t>();
  return rep;
}

}  // namespace pathovox

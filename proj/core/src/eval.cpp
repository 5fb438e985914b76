// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "comuse/eval.hpp"

#include <cstdio>
#include <sstream>
#include <utility>

#include "comuse/errors.hpp"

namespace comuse {

ConfusionMatrix confusion(const std::vector<Label>& predictions,
                          const std::vector<Label>& gold) {
  if (predictions.size() != gold.size()) {
    throw DimensionError("confusion: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(gold.size()) +
                         " gold labels");
  }
  if (predictions.empty()) {
    throw EmptyDatasetError("confusion over zero pairs");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool predicted_useful = predictions[i] == Label::Useful;
    if (gold[i] == Label::Useful) {
      (predicted_useful ? m.tp : m.fn) += 1;
    } else {
      (predicted_useful ? m.fp : m.tn) += 1;
    }
  }
  return m;
}

Metrics metrics(const ConfusionMatrix& matrix) {
  if (matrix.total() == 0) {
    throw EmptyDatasetError("metrics over an empty confusion matrix");
  }
  /* 0/0 ratios are defined as 0, never NaN. */
  auto ratio = [](double numerator, double denominator) {
    return denominator == 0.0 ? 0.0 : numerator / denominator;
  };
  Metrics out;
  const auto tp = static_cast<double>(matrix.tp);
  out.accuracy = static_cast<double>(matrix.tp + matrix.tn) /
                 static_cast<double>(matrix.total());
  out.precision = ratio(tp, static_cast<double>(matrix.tp + matrix.fp));
  out.recall = ratio(tp, static_cast<double>(matrix.tp + matrix.fn));
  out.f1 = ratio(2.0 * out.precision * out.recall, out.precision + out.recall);
  return out;
}

MetricsReport make_report(std::string run_name, std::string dataset_name,
                          std::string algorithm, const ConfusionMatrix& matrix) {
  MetricsReport report;
  report.run_name = std::move(run_name);
  report.dataset_name = std::move(dataset_name);
  report.algorithm = std::move(algorithm);
  report.matrix = matrix;
  report.scores = metrics(matrix);
  report.useful_test_size = matrix.tp + matrix.fn;
  return report;
}

namespace {

std::string fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  return std::string(buffer);
}

std::string csv_cell(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string render_report(const std::vector<MetricsReport>& reports,
                          ReportFormat format, int accuracy_decimals) {
  if (accuracy_decimals < 0 || accuracy_decimals > 12) {
    throw InvalidArgument("accuracy_decimals out of range");
  }
  std::ostringstream out;
  if (format == ReportFormat::Markdown) {
    out << "### Accuracy\n\n";
    out << "| Experiment | Dataset | Algorithm | Accuracy (%) |\n";
    out << "|---|---|---|---|\n";
    for (const auto& r : reports) {
      out << "| " << r.run_name << " | " << r.dataset_name << " | "
          << r.algorithm << " | "
          << fixed(100.0 * r.scores.accuracy, accuracy_decimals) << " |\n";
    }
    out << "\n### Useful-class metrics\n\n";
    out << "| Experiment | Useful test size | Precision | Recall | F1-score |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& r : reports) {
      out << "| " << r.run_name << " | " << r.useful_test_size << " | "
          << fixed(r.scores.precision, 2) << " | " << fixed(r.scores.recall, 2)
          << " | " << fixed(r.scores.f1, 2) << " |\n";
    }
  } else {
    out << "experiment,dataset,algorithm,accuracy_percent\n";
    for (const auto& r : reports) {
      out << csv_cell(r.run_name) << ',' << csv_cell(r.dataset_name) << ','
          << csv_cell(r.algorithm) << ','
          << fixed(100.0 * r.scores.accuracy, accuracy_decimals) << '\n';
    }
    out << '\n';
    out << "experiment,useful_test_size,useful_precision,useful_recall,useful_f1\n";
    for (const auto& r : reports) {
      out << csv_cell(r.run_name) << ',' << r.useful_test_size << ','
          << fixed(r.scores.precision, 2) << ',' << fixed(r.scores.recall, 2)
          << ',' << fixed(r.scores.f1, 2) << '\n';
    }
  }
  return out.str();
}

}  // namespace comuse

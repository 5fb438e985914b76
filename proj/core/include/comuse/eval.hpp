// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "comuse/corpus.hpp"

namespace comuse {

/* Binary confusion counts with Useful as the positive class. */
struct ConfusionMatrix {
  std::uint64_t tp = 0; /* gold Useful,     predicted Useful */
  std::uint64_t fp = 0; /* gold Not Useful, predicted Useful */
  std::uint64_t fn = 0; /* gold Useful,     predicted Not Useful */
  std::uint64_t tn = 0; /* gold Not Useful, predicted Not Useful */

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/* Tallies predictions against gold labels, pairing by index.
 * Throws DimensionError on length mismatch and EmptyDatasetError when both
 * are empty. */
ConfusionMatrix confusion(const std::vector<Label>& predictions,
                          const std::vector<Label>& gold);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0; /* of the Useful class */
  double recall = 0.0;    /* of the Useful class */
  double f1 = 0.0;        /* of the Useful class */
};

/* Standard definitions; any 0/0 (no predicted positives, no gold
 * positives, p + r == 0) is defined as 0 rather than NaN. Throws
 * EmptyDatasetError when the matrix is all zero. */
Metrics metrics(const ConfusionMatrix& matrix);

/* One evaluated run, ready for rendering. */
struct MetricsReport {
  std::string run_name;
  std::string dataset_name;
  std::string algorithm;
  ConfusionMatrix matrix;
  Metrics scores;
  std::size_t useful_test_size = 0; /* gold Useful count in the test set */
};

MetricsReport make_report(std::string run_name, std::string dataset_name,
                          std::string algorithm, const ConfusionMatrix& matrix);

enum class ReportFormat : std::uint8_t { Markdown, Csv };

/* Renders two tables: overall accuracy per run (as a percentage), and
 * Useful-class size / precision / recall / F1 per run. Rows keep the order
 * given. Accuracy uses `accuracy_decimals` digits, class metrics use two.
 * Output is wholly determined by the inputs. */
std::string render_report(const std::vector<MetricsReport>& reports,
                          ReportFormat format, int accuracy_decimals = 2);

}  // namespace comuse

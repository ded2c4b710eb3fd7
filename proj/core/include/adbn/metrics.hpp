// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adbn/data.hpp"
#include "adbn/dbn.hpp"

namespace adbn {

/// counts(true, predicted).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_labels);
  ConfusionMatrix(std::vector<std::string> class_labels,
                  std::vector<std::vector<std::uint64_t>> counts);

  std::size_t n_classes() const noexcept { return labels_.size(); }
  const std::vector<std::string>& class_labels() const noexcept { return labels_; }

  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_.at(truth).at(predicted);
  }
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t column_sum(std::size_t predicted) const;
  std::uint64_t total() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<std::uint64_t>> counts_;
};

/// Evaluates `model` on every sample. The dataset must use the model's label list.
ConfusionMatrix confusion(const Dbn& model, const LabeledDataset& ds);

struct ClassMetrics {
  std::string label;
  std::uint64_t support = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ratio = 0.0;  // classification ratio, i.e. recall
  bool undefined = false;  // some denominator was zero and the value defaulted to 0
};

struct ClassReport {
  std::vector<ClassMetrics> classes;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double macro_ratio = 0.0;
  double accuracy = 0.0;
};

/// Precision TP/(TP+FP), recall TP/(TP+FN), F1 = 2PR/(P+R), macro = unweighted
/// mean over all classes. Zero denominators give 0 and set `undefined`.
ClassReport class_report(const ConfusionMatrix& cm);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;

  double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
  std::uint64_t total() const;
};

/// Equal-width bins over [min, max]; the max lands in the last bin. When all
/// values coincide every value lands in bin 0.
Histogram kl_histogram(std::span<const double> values, std::size_t bins);

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
void write_class_report_csv(std::ostream& out, const ClassReport& report);
/// Per-class classification ratio table in percent with a final average row.
void write_ratio_table_csv(std::ostream& out, const ClassReport& report);
/// Human-readable document with one table per metric.
void write_report_text(std::ostream& out, const ConfusionMatrix& cm, const ClassReport& report);
void write_histogram_csv(std::ostream& out, const Histogram& h);

/// Parses the layout written by write_confusion_csv.
ConfusionMatrix read_confusion_csv(std::istream& in);

}  // namespace adbn

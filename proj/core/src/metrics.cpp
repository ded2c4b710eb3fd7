// SPDX-License-Identifier: Apache-2.0
#include "adbn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "adbn/errors.hpp"

namespace adbn {
namespace {

double ratio_or_zero(std::uint64_t num, std::uint64_t den, bool& undefined) {
  if (den == 0) {
    undefined = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  return out;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_labels)
    : labels_(std::move(class_labels)),
      counts_(labels_.size(), std::vector<std::uint64_t>(labels_.size(), 0)) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_labels,
                                 std::vector<std::vector<std::uint64_t>> counts)
    : labels_(std::move(class_labels)), counts_(std::move(counts)) {
  if (counts_.size() != labels_.size()) throw InvalidArgument("ConfusionMatrix: row count mismatch");
  for (const auto& row : counts_) {
    if (row.size() != labels_.size()) throw InvalidArgument("ConfusionMatrix: matrix is not square");
  }
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  if (truth >= n_classes() || predicted >= n_classes()) {
    throw InvalidArgument("ConfusionMatrix::add: class index out of range");
  }
  counts_[truth][predicted] += n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  const auto& row = counts_.at(truth);
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (const auto& row : counts_) s += row.at(predicted);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (std::size_t r = 0; r < n_classes(); ++r) s += row_sum(r);
  return s;
}

ConfusionMatrix confusion(const Dbn& model, const LabeledDataset& ds) {
  if (ds.class_labels != model.class_labels()) {
    throw InvalidArgument("confusion: dataset labels differ from the model's labels");
  }
  if (!ds.empty() && ds.input_size() != model.input_size()) {
    throw InvalidArgument("confusion: dataset input width " + std::to_string(ds.input_size()) +
                          " does not match model input width " +
                          std::to_string(model.input_size()));
  }
  ConfusionMatrix cm(model.class_labels());
  for (const auto& s : ds.samples) cm.add(s.label, model.predict_label(s.input));
  return cm;
}

ClassReport class_report(const ConfusionMatrix& cm) {
  if (cm.n_classes() == 0 || cm.total() == 0) {
    throw InvalidArgument("class_report: empty confusion matrix");
  }
  ClassReport report;
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    ClassMetrics m;
    m.label = cm.class_labels()[c];
    m.support = cm.row_sum(c);
    m.tp = cm(c, c);
    m.fp = cm.column_sum(c) - m.tp;
    m.fn = m.support - m.tp;
    m.precision = ratio_or_zero(m.tp, m.tp + m.fp, m.undefined);
    m.recall = ratio_or_zero(m.tp, m.tp + m.fn, m.undefined);
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      m.f1 = 0.0;
    }
    m.ratio = m.recall;
    correct += m.tp;
    report.classes.push_back(m);
  }
  const auto n = static_cast<double>(report.classes.size());
  for (const auto& m : report.classes) {
    report.macro_precision += m.precision / n;
    report.macro_recall += m.recall / n;
    report.macro_f1 += m.f1 / n;
    report.macro_ratio += m.ratio / n;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(cm.total());
  return report;
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Histogram kl_histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) throw InvalidArgument("kl_histogram: no values");
  if (bins < 1) throw InvalidArgument("kl_histogram: bins must be >= 1");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("kl_histogram: non-finite value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  Histogram h{*lo, *hi, std::vector<std::uint64_t>(bins, 0)};
  const double range = h.hi - h.lo;
  for (double v : values) {
    std::size_t b = 0;
    if (range > 0.0) {
      b = static_cast<std::size_t>((v - h.lo) / range * static_cast<double>(bins));
      b = std::min(b, bins - 1);
    }
    ++h.counts[b];
  }
  return h;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true\\predicted";
  for (const auto& l : cm.class_labels()) out << ',' << l;
  out << '\n';
  for (std::size_t r = 0; r < cm.n_classes(); ++r) {
    out << cm.class_labels()[r];
    for (std::size_t c = 0; c < cm.n_classes(); ++c) out << ',' << cm(r, c);
    out << '\n';
  }
}

ConfusionMatrix read_confusion_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("confusion CSV: empty input");
  auto header = split_csv_line(line);
  if (header.size() < 2) throw DataError("confusion CSV: header has no classes");
  std::vector<std::string> labels(header.begin() + 1, header.end());
  std::vector<std::vector<std::uint64_t>> counts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != labels.size() + 1) {
      throw DataError("confusion CSV line " + std::to_string(line_no) + ": wrong field count");
    }
    if (fields[0] != labels.at(counts.size())) {
      throw DataError("confusion CSV line " + std::to_string(line_no) +
                      ": row label does not follow header order");
    }
    std::vector<std::uint64_t> row;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(fields[k], &used);
        if (used != fields[k].size()) throw std::invalid_argument(fields[k]);
        row.push_back(v);
      } catch (const std::exception&) {
        throw DataError("confusion CSV line " + std::to_string(line_no) + ": bad count '" +
                        fields[k] + "'");
      }
    }
    counts.push_back(std::move(row));
    if (counts.size() > labels.size()) throw DataError("confusion CSV: too many rows");
  }
  if (counts.size() != labels.size()) throw DataError("confusion CSV: missing rows");
  return ConfusionMatrix(std::move(labels), std::move(counts));
}

void write_class_report_csv(std::ostream& out, const ClassReport& report) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "class,support,tp,fp,fn,precision,recall,f1,classification_ratio,undefined\n";
  for (const auto& m : report.classes) {
    out << m.label << ',' << m.support << ',' << m.tp << ',' << m.fp << ',' << m.fn << ','
        << m.precision << ',' << m.recall << ',' << m.f1 << ',' << m.ratio << ','
        << (m.undefined ? 1 : 0) << '\n';
  }
  out << "macro,,,,," << report.macro_precision << ',' << report.macro_recall << ','
      << report.macro_f1 << ',' << report.macro_ratio << ",0\n";
  out.precision(old);
}

void write_ratio_table_csv(std::ostream& out, const ClassReport& report) {
  std::ostringstream body;
  body << std::fixed << std::setprecision(1);
  body << "category,classification_ratio_percent\n";
  for (const auto& m : report.classes) body << m.label << ',' << 100.0 * m.ratio << '\n';
  body << "Ave.," << 100.0 * report.macro_ratio << '\n';
  out << body.str();
}

void write_report_text(std::ostream& out, const ConfusionMatrix& cm, const ClassReport& report) {
  std::ostringstream doc;
  std::size_t width = 9;
  for (const auto& l : cm.class_labels()) width = std::max(width, l.size() + 2);
  const auto w = static_cast<int>(width);

  doc << "# Confusion matrix (rows: true, columns: predicted)\n";
  doc << std::setw(w) << std::left << "" << std::right;
  for (const auto& l : cm.class_labels()) doc << std::setw(w) << l;
  doc << '\n';
  for (std::size_t r = 0; r < cm.n_classes(); ++r) {
    doc << std::setw(w) << std::left << cm.class_labels()[r] << std::right;
    for (std::size_t c = 0; c < cm.n_classes(); ++c) doc << std::setw(w) << cm(r, c);
    doc << '\n';
  }

  doc << "\n# Classification ratio\n" << std::fixed << std::setprecision(1);
  for (const auto& m : report.classes) {
    doc << std::setw(w) << std::left << m.label << std::right << std::setw(8) << 100.0 * m.ratio
        << "%\n";
  }
  doc << std::setw(w) << std::left << "Ave." << std::right << std::setw(8)
      << 100.0 * report.macro_ratio << "%\n";

  doc << "\n# Precision / recall / F1\n" << std::setprecision(3);
  doc << std::setw(w) << std::left << "" << std::right << std::setw(10) << "precision"
      << std::setw(10) << "recall" << std::setw(10) << "f1" << '\n';
  for (const auto& m : report.classes) {
    doc << std::setw(w) << std::left << m.label << std::right << std::setw(10) << m.precision
        << std::setw(10) << m.recall << std::setw(10) << m.f1 << (m.undefined ? "  (undefined)" : "")
        << '\n';
  }
  doc << std::setw(w) << std::left << "macro" << std::right << std::setw(10)
      << report.macro_precision << std::setw(10) << report.macro_recall << std::setw(10)
      << report.macro_f1 << '\n';
  doc << "\naccuracy " << std::setprecision(4) << report.accuracy << '\n';
  out << doc.str();
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "bin,lower,upper,count\n";
  const double width = h.bin_width();
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double lower = h.lo + width * static_cast<double>(b);
    const double upper = b + 1 == h.counts.size() ? h.hi : h.lo + width * static_cast<double>(b + 1);
    out << b << ',' << lower << ',' << upper << ',' << h.counts[b] << '\n';
  }
  out.precision(old);
}

}  // namespace adbn

// SPDX-License-Identifier: Apache-2.0
#include "adbn/relearn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "adbn/errors.hpp"

namespace adbn {
namespace {

std::vector<std::size_t> class_positions(const std::vector<std::string>& available,
                                         const std::vector<std::string>& wanted,
                                         const char* who) {
  std::vector<std::size_t> pos;
  pos.reserve(wanted.size());
  for (const auto& name : wanted) {
    const auto it = std::find(available.begin(), available.end(), name);
    if (it == available.end()) {
      throw InvalidArgument(std::string("class-set mismatch: ") + who + " has no class '" + name + "'");
    }
    pos.push_back(static_cast<std::size_t>(it - available.begin()));
  }
  return pos;
}

Vector restrict_and_normalize(const Vector& full, const std::vector<std::size_t>& pos) {
  Vector out(pos.size());
  double total = 0.0;
  for (std::size_t k = 0; k < pos.size(); ++k) {
    out[k] = full[pos[k]];
    total += out[k];
  }
  if (total > 0.0) {
    for (auto& p : out) p /= total;
  } else {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  }
  return out;
}

LabeledDataset focus_subset(const LabeledDataset& ds, const std::vector<std::string>& focus) {
  std::map<std::size_t, std::size_t> remap;
  for (std::size_t k = 0; k < focus.size(); ++k) {
    const auto it = std::find(ds.class_labels.begin(), ds.class_labels.end(), focus[k]);
    if (it != ds.class_labels.end()) {
      remap.emplace(static_cast<std::size_t>(it - ds.class_labels.begin()), k);
    }
  }
  LabeledDataset out;
  out.class_labels = focus;
  out.feature_min = ds.feature_min;
  out.feature_max = ds.feature_max;
  for (const auto& s : ds.samples) {
    const auto it = remap.find(s.label);
    if (it == remap.end()) continue;
    LabeledSample copy = s;
    copy.label = it->second;
    out.samples.push_back(std::move(copy));
  }
  return out;
}

double accuracy(const Dbn& model, const LabeledDataset& ds) {
  std::size_t correct = 0;
  for (const auto& s : ds.samples) {
    if (model.predict_label(s.input) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace

RelearnPlan build_plan(std::shared_ptr<const Dbn> parent, const LabeledDataset& ds,
                       const std::vector<std::string>& focus_classes) {
  if (!parent) throw InvalidArgument("build_plan: no parent model");
  if (focus_classes.empty()) throw InvalidArgument("build_plan: focus classes must be non-empty");
  class_positions(ds.class_labels, focus_classes, "dataset");
  const auto parent_pos = class_positions(parent->class_labels(), focus_classes, "parent model");
  if (!ds.empty() && ds.input_size() != parent->input_size()) {
    throw InvalidArgument("build_plan: dataset input width does not match the parent model");
  }

  RelearnPlan plan;
  plan.parent = std::move(parent);
  plan.focus_classes = focus_classes;
  plan.focus_data = focus_subset(ds, focus_classes);
  for (const auto& s : plan.focus_data.samples) {
    plan.set0.push_back(s.id);
    const bool correct = plan.parent->predict_label(s.input) == parent_pos[s.label];
    (correct ? plan.set1 : plan.set2).push_back(s.id);
  }
  if (plan.set1.empty() || plan.set2.empty()) {
    throw DegeneratePartition("degenerate partition: set0=" + std::to_string(plan.set0.size()) +
                                  " set1=" + std::to_string(plan.set1.size()) +
                                  " set2=" + std::to_string(plan.set2.size()),
                              plan.set1.size(), plan.set2.size());
  }
  return plan;
}

Dbn train_child(const RelearnPlan& plan, ChildSet which, const DbnTrainConfig& cfg,
                SeededRng& rng) {
  const auto& ids = which == ChildSet::kSet1 ? plan.set1 : plan.set2;
  if (ids.empty()) throw InvalidArgument("train_child: chosen set is empty");
  return train_dbn(plan.focus_data.subset(ids), cfg, rng).model;
}

Vector focus_distribution(const Dbn& model, std::span<const double> input,
                          const std::vector<std::string>& classes) {
  return restrict_and_normalize(model.predict_proba(input),
                                class_positions(model.class_labels(), classes, "model"));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    throw InvalidArgument("kl_divergence: distributions must be non-empty and equal length");
  }
  double kl = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] <= 0.0) continue;
    kl += p[c] * std::log(p[c] / std::max(q[c], kKlProbabilityFloor));
  }
  return std::max(kl, 0.0);
}

std::vector<double> KlReport::values() const {
  std::vector<double> out;
  out.reserve(per_sample.size());
  for (const auto& s : per_sample) out.push_back(s.kl);
  return out;
}

KlReport kl_divergence(const Dbn& p, const Dbn& q, const LabeledDataset& samples,
                       std::string p_name, std::string q_name) {
  const auto& classes = q.class_labels();
  const auto p_pos = class_positions(p.class_labels(), classes, "model P");
  const auto q_pos = class_positions(q.class_labels(), classes, "model Q");
  KlReport report;
  report.p_name = std::move(p_name);
  report.q_name = std::move(q_name);
  report.per_sample.reserve(samples.size());
  double total = 0.0;
  for (const auto& s : samples.samples) {
    const Vector pd = restrict_and_normalize(p.predict_proba(s.input), p_pos);
    const Vector qd = restrict_and_normalize(q.predict_proba(s.input), q_pos);
    const double kl = kl_divergence(pd, qd);
    report.per_sample.push_back({s.id, kl, s.valence, s.arousal});
    total += kl;
  }
  report.aggregate = samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
  return report;
}

ThresholdPartition partition_by_threshold(const KlReport& report, double theta) {
  if (std::isnan(theta) || theta < 0.0) {
    throw InvalidArgument("partition_by_threshold: threshold must be >= 0");
  }
  ThresholdPartition part;
  for (const auto& s : report.per_sample) (s.kl > theta ? part.above : part.below).push_back(s.id);
  return part;
}

SweepResult relearn_sweep(const RelearnPlan& plan, const Dbn& q2, std::span<const double> thresholds,
                          const DbnTrainConfig& cfg, const SeededRng& rng,
                          const SweepOptions& options) {
  if (thresholds.empty()) throw InvalidArgument("relearn_sweep: no thresholds");
  for (double t : thresholds) {
    if (std::isnan(t) || t < 0.0) throw InvalidArgument("relearn_sweep: thresholds must be >= 0");
  }
  const LabeledDataset set2 = plan.focus_data.subset(plan.set2);

  LabeledDataset eval;
  switch (options.eval_set) {
    case EvalSet::kSet2: eval = set2; break;
    case EvalSet::kSet0: eval = plan.focus_data; break;
    case EvalSet::kHeldOut:
      if (options.held_out == nullptr) {
        throw InvalidArgument("relearn_sweep: held-out evaluation requested without a dataset");
      }
      eval = focus_subset(*options.held_out, plan.focus_classes);
      break;
  }
  if (eval.empty()) throw InvalidArgument("relearn_sweep: evaluation set is empty");

  SweepResult result;
  result.report = kl_divergence(*plan.parent, q2, set2, "P", "Q2");

  std::vector<std::future<SweepRow>> jobs;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    const double theta = thresholds[k];
    const auto above = partition_by_threshold(result.report, theta).above;
    jobs.push_back(std::async(std::launch::async, [&, theta, above, k]() {
      SweepRow row;
      row.theta = theta;
      row.n_above = above.size();
      if (above.empty()) {
        row.empty = true;
        return row;
      }
      SeededRng child_rng = rng.derive(k);
      const Dbn child = train_dbn(set2.subset(above), cfg, child_rng).model;
      row.classification_ratio = accuracy(child, eval);
      return row;
    }));
  }
  for (auto& job : jobs) result.rows.push_back(job.get());
  return result;
}

void write_scatter_csv(std::ostream& out, const KlReport& report, double theta) {
  std::ostringstream body;
  body << std::setprecision(std::numeric_limits<double>::max_digits10);
  body << "id,valence,arousal,kl,above\n";
  for (const auto& s : report.per_sample) {
    if (!s.valence || !s.arousal) {
      throw InvalidArgument("export_scatter: sample " + std::to_string(s.id) +
                            " has no valence/arousal annotation");
    }
    body << s.id << ',' << *s.valence << ',' << *s.arousal << ',' << s.kl << ','
         << (s.kl > theta ? 1 : 0) << '\n';
  }
  out << body.str();
}

void export_scatter(const KlReport& report, double theta, const std::filesystem::path& path) {
  std::ostringstream body;
  write_scatter_csv(body, report, theta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << body.str();
}

void write_plan_summary(std::ostream& out, const RelearnPlan& plan) {
  std::string focus;
  for (const auto& c : plan.focus_classes) focus += (focus.empty() ? "" : ", ") + c;
  out << "# Data sets for re-learning child models\n"
      << "focus classes: " << focus << '\n'
      << "dataset  description                                 cases\n"
      << "Set 0    all samples in the focus classes            " << std::setw(5) << plan.set0.size() << '\n'
      << "Set 1    parent-correct cases; Q1 trains Set 1       " << std::setw(5) << plan.set1.size() << '\n'
      << "Set 2    parent-wrong cases; Q2 trains Set 2         " << std::setw(5) << plan.set2.size() << '\n';
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  std::ostringstream body;
  body << std::setprecision(std::numeric_limits<double>::max_digits10);
  body << "theta,n_above,classification_ratio,flag\n";
  for (const auto& r : sweep.rows) {
    body << r.theta << ',' << r.n_above << ',';
    if (r.empty) {
      body << ",empty\n";
    } else {
      body << r.classification_ratio << ",ok\n";
    }
  }
  out << body.str();
}

void write_sweep_summary(std::ostream& out, const SweepResult& sweep) {
  std::ostringstream body;
  body << "# Classification ratio of re-learning child model\n"
       << "aggregate KL(" << sweep.report.p_name << ", " << sweep.report.q_name
       << ") over Set 2: " << std::setprecision(6) << sweep.report.aggregate << '\n'
       << "theta            n_above  classification ratio\n";
  for (const auto& r : sweep.rows) {
    body << std::left << std::setw(16) << std::setprecision(6) << r.theta << ' ' << std::right
         << std::setw(8) << r.n_above << "  ";
    if (r.empty) {
      body << "(empty)\n";
    } else {
      body << std::fixed << std::setprecision(1) << 100.0 * r.classification_ratio << "%\n"
           << std::defaultfloat;
    }
  }
  out << body.str();
}

}  // namespace adbn

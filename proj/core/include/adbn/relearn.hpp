// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adbn/data.hpp"
#include "adbn/dbn.hpp"

namespace adbn {

/// Parent/child partition of the focus-class samples.
///
/// set0 holds every focus-class sample, set1 the ones the parent labels
/// correctly and set2 the ones it gets wrong. `focus_data` carries the set0
/// samples with labels re-indexed into `focus_classes`.
struct RelearnPlan {
  std::shared_ptr<const Dbn> parent;
  std::vector<std::string> focus_classes;
  LabeledDataset focus_data;
  std::vector<std::uint64_t> set0;
  std::vector<std::uint64_t> set1;
  std::vector<std::uint64_t> set2;
};

enum class ChildSet { kSet1, kSet2 };

/// Where a re-learning child's classification ratio is measured.
enum class EvalSet { kSet2, kSet0, kHeldOut };

/// Correctness is judged by the parent's full argmax over all of its classes.
/// Throws DegeneratePartition when set1 or set2 would be empty.
RelearnPlan build_plan(std::shared_ptr<const Dbn> parent, const LabeledDataset& ds,
                       const std::vector<std::string>& focus_classes);

/// Fresh model trained only on the chosen set, with one output per focus class.
Dbn train_child(const RelearnPlan& plan, ChildSet which, const DbnTrainConfig& cfg,
                SeededRng& rng);

/// The model's softmax restricted to `classes` (by name) and renormalized.
Vector focus_distribution(const Dbn& model, std::span<const double> input,
                          const std::vector<std::string>& classes);

inline constexpr double kKlProbabilityFloor = 1e-12;

/// sum_c p_c ln(p_c / max(q_c, 1e-12)); terms with p_c = 0 contribute 0 and the
/// result is clamped at 0 from below.
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct KlSample {
  std::uint64_t id = 0;
  double kl = 0.0;
  std::optional<double> valence;
  std::optional<double> arousal;
};

struct KlReport {
  std::vector<KlSample> per_sample;
  double aggregate = 0.0;  // mean of per_sample kl
  std::string p_name;
  std::string q_name;

  std::vector<double> values() const;
};

/// Per-sample KL between the parent and child distributions over the child's
/// classes. Throws InvalidArgument if the parent lacks any of them.
KlReport kl_divergence(const Dbn& p, const Dbn& q, const LabeledDataset& samples,
                       std::string p_name = "P", std::string q_name = "Q");

struct ThresholdPartition {
  std::vector<std::uint64_t> above;  // kl > theta
  std::vector<std::uint64_t> below;
};

ThresholdPartition partition_by_threshold(const KlReport& report, double theta);

struct SweepRow {
  double theta = 0.0;
  std::size_t n_above = 0;
  double classification_ratio = 0.0;  // accuracy of the re-learning child on the evaluation set
  bool empty = false;                 // nothing above theta; no child trained
};

struct SweepResult {
  KlReport report;  // KL(P, Q2) over set2
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  EvalSet eval_set = EvalSet::kSet2;
  /// Required for EvalSet::kHeldOut; samples outside the focus classes are ignored.
  const LabeledDataset* held_out = nullptr;
};

/// For each threshold: train a fresh child on the set2 samples whose
/// KL(P, Q2) exceeds it and measure it on the evaluation set. Child k uses
/// rng.derive(k), so rows are independent of evaluation order.
SweepResult relearn_sweep(const RelearnPlan& plan, const Dbn& q2, std::span<const double> thresholds,
                          const DbnTrainConfig& cfg, const SeededRng& rng,
                          const SweepOptions& options = {});

/// Rows (id, valence, arousal, kl, above). Throws InvalidArgument when a
/// sample lacks valence or arousal.
void write_scatter_csv(std::ostream& out, const KlReport& report, double theta);
void export_scatter(const KlReport& report, double theta, const std::filesystem::path& path);

void write_plan_summary(std::ostream& out, const RelearnPlan& plan);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_sweep_summary(std::ostream& out, const SweepResult& sweep);

}  // namespace adbn

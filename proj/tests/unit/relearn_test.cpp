// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "adbn/data.hpp"
#include "adbn/errors.hpp"
#include "adbn/model_io.hpp"
#include "adbn/relearn.hpp"
#include "support/oracles.hpp"

namespace adbn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(KlDivergence, ReferenceValue) {
  EXPECT_NEAR(kl_divergence(Vector{0.9, 0.1}, Vector{0.5, 0.5}), 0.3680642071684971, 1e-15);
}

TEST(KlDivergence, IdentityIsZero) {
  SeededRng rng(1);
  for (int k = 0; k < 200; ++k) {
    const Vector p = testing::random_distribution(1 + rng.uniform_index(6), rng);
    EXPECT_EQ(kl_divergence(p, p), 0.0);
  }
}

TEST(KlDivergence, MatchesBruteForce) {
  SeededRng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + rng.uniform_index(5);
    Vector p = testing::random_distribution(n, rng), q = testing::random_distribution(n, rng);
    if (k % 7 == 0) p[rng.uniform_index(n)] = 0.0;
    if (k % 11 == 0) q[rng.uniform_index(n)] = 0.0;
    const double got = kl_divergence(p, q);
    EXPECT_NEAR(got, testing::brute_kl(p, q), 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_TRUE(std::isfinite(got));
  }
}

TEST(KlDivergence, ZeroTermsAndFloor) {
  EXPECT_EQ(kl_divergence(Vector{0.0, 1.0}, Vector{0.5, 0.5}), std::log(2.0));
  EXPECT_NEAR(kl_divergence(Vector{1.0, 0.0}, Vector{0.0, 1.0}), -std::log(kKlProbabilityFloor), 1e-9);
  EXPECT_THROW(kl_divergence(Vector{1.0}, Vector{0.5, 0.5}), InvalidArgument);
}

KlReport report_of(const std::vector<double>& kls) {
  KlReport r;
  for (std::size_t i = 0; i < kls.size(); ++i) r.per_sample.push_back({i, kls[i], 0.1 * static_cast<double>(i) - 0.5, 0.25});
  return r;
}

TEST(Partition, Laws) {
  SeededRng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> kls(1 + rng.uniform_index(30));
    for (auto& x : kls) x = rng.uniform(0, 3) * (rng.uniform() < 0.2 ? 0.0 : 1.0);
    const KlReport r = report_of(kls);
    const auto all = partition_by_threshold(r, 0.0);
    const std::size_t positive = static_cast<std::size_t>(std::count_if(kls.begin(), kls.end(), [](double x) { return x > 0; }));
    EXPECT_EQ(all.above.size(), positive);
    EXPECT_TRUE(partition_by_threshold(r, *std::max_element(kls.begin(), kls.end())).above.empty());
    EXPECT_TRUE(partition_by_threshold(r, kInf).above.empty());
    std::size_t prev = kls.size() + 1;
    for (double theta = 0.0; theta < 3.5; theta += 0.25) {
      const auto part = partition_by_threshold(r, theta);
      EXPECT_EQ(part.above.size() + part.below.size(), kls.size());
      EXPECT_LE(part.above.size(), prev);
      prev = part.above.size();
      std::set<std::uint64_t> ids(part.above.begin(), part.above.end());
      for (auto id : part.below) EXPECT_FALSE(ids.count(id));
    }
  }
  EXPECT_THROW(partition_by_threshold(report_of({1.0}), -0.1), InvalidArgument);
}

TEST(Scatter, RoundTripsNineDigits) {
  const KlReport r = report_of({0.123456789123, 2.5, 1e-7});
  std::stringstream buf;
  write_scatter_csv(buf, r, 1.0);
  std::string line;
  std::getline(buf, line);
  EXPECT_EQ(line, "id,valence,arousal,kl,above");
  for (const auto& s : r.per_sample) {
    std::getline(buf, line);
    std::istringstream row(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(row, field, ',')) values.push_back(std::stod(field));
    ASSERT_EQ(values.size(), 5u);
    EXPECT_EQ(values[0], static_cast<double>(s.id));
    EXPECT_NEAR(values[1], *s.valence, 1e-9 * std::abs(*s.valence));
    EXPECT_NEAR(values[3], s.kl, 1e-9 * s.kl);
    EXPECT_EQ(values[4], s.kl > 1.0 ? 1.0 : 0.0);
  }
  KlReport missing = r;
  missing.per_sample[1].arousal.reset();
  std::ostringstream sink;
  EXPECT_THROW(write_scatter_csv(sink, missing, 1.0), InvalidArgument);
}

DbnTrainConfig quick_config() {
  DbnTrainConfig cfg;
  cfg.rbm.epochs = 10;
  cfg.rbm.gen_threshold = 3e-4;
  return cfg;
}

double accuracy(const Dbn& model, const LabeledDataset& ds) {
  std::size_t ok = 0;
  for (const auto& s : ds.samples) ok += model.predict_label(s.input) == s.label;
  return static_cast<double>(ok) / static_cast<double>(ds.size());
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SeededRng rng(4);
    data_ = std::make_unique<LabeledDataset>(make_overlap_fixture(150, 0.6, rng));
    parent_ = std::make_shared<const Dbn>(train_dbn(*data_, quick_config(), rng).model);
    parent_bytes_ = model_to_string(*parent_);
    plan_ = std::make_unique<RelearnPlan>(build_plan(parent_, *data_, data_->class_labels));
    SeededRng r1(5), r2(6);
    q1_ = std::make_unique<Dbn>(train_child(*plan_, ChildSet::kSet1, quick_config(), r1));
    q2_ = std::make_unique<Dbn>(train_child(*plan_, ChildSet::kSet2, quick_config(), r2));
  }
  static void TearDownTestSuite() {
    data_.reset();
    parent_.reset();
    plan_.reset();
    q1_.reset();
    q2_.reset();
  }
  static inline std::unique_ptr<LabeledDataset> data_;
  static inline std::shared_ptr<const Dbn> parent_;
  static inline std::string parent_bytes_;
  static inline std::unique_ptr<RelearnPlan> plan_;
  static inline std::unique_ptr<Dbn> q1_;
  static inline std::unique_ptr<Dbn> q2_;
};

TEST_F(Pipeline, PlanLaws) {
  const auto& p = *plan_;
  EXPECT_EQ(p.set0.size(), data_->size());
  EXPECT_EQ(p.set1.size() + p.set2.size(), p.set0.size());
  std::set<std::uint64_t> s1(p.set1.begin(), p.set1.end());
  for (auto id : p.set2) EXPECT_FALSE(s1.count(id));
  for (const auto& s : p.focus_data.samples) {
    const bool correct = parent_->predict_label(s.input) == s.label;
    EXPECT_EQ(correct, s1.count(s.id) == 1);
  }
}

TEST_F(Pipeline, PlanIsDeterministic) {
  const RelearnPlan again = build_plan(parent_, *data_, data_->class_labels);
  EXPECT_EQ(again.set1, plan_->set1);
  EXPECT_EQ(again.set2, plan_->set2);
}

TEST_F(Pipeline, ChildrenUseFocusClasses) {
  EXPECT_EQ(q1_->class_labels(), plan_->focus_classes);
  EXPECT_EQ(q2_->class_labels(), plan_->focus_classes);
}

TEST_F(Pipeline, SetOneChildMatchesParentOnSetOne) {
  const LabeledDataset set1 = plan_->focus_data.subset(plan_->set1);
  DbnTrainConfig cfg = quick_config();
  cfg.head_epochs = 10000;
  SeededRng rng(5);
  const Dbn q1 = train_child(*plan_, ChildSet::kSet1, cfg, rng);
  EXPECT_GE(accuracy(q1, set1), accuracy(*parent_, set1));
}

TEST_F(Pipeline, KlOrdering) {
  const KlReport pq1 = kl_divergence(*parent_, *q1_, plan_->focus_data, "P", "Q1");
  const KlReport pq2 = kl_divergence(*parent_, *q2_, plan_->focus_data, "P", "Q2");
  EXPECT_GT(pq2.aggregate, pq1.aggregate);
  EXPECT_EQ(pq1.per_sample.size(), plan_->set0.size());
  double sum = 0.0;
  for (const auto& s : pq2.per_sample) {
    EXPECT_GE(s.kl, 0.0);
    sum += s.kl;
  }
  EXPECT_NEAR(pq2.aggregate, sum / static_cast<double>(pq2.per_sample.size()), 1e-12);
  EXPECT_EQ(kl_divergence(*parent_, *parent_, plan_->focus_data).aggregate, 0.0);
}

TEST_F(Pipeline, SweepRowsAndDeterminism) {
  const std::vector<double> thresholds{kInf, 1.0, 0.0};
  const SeededRng rng(7);
  const SweepResult a = relearn_sweep(*plan_, *q2_, thresholds, quick_config(), rng);
  const SweepResult b = relearn_sweep(*plan_, *q2_, thresholds, quick_config(), rng);
  ASSERT_EQ(a.rows.size(), 3u);
  EXPECT_TRUE(a.rows[0].empty);
  EXPECT_EQ(a.rows[0].n_above, 0u);
  EXPECT_EQ(a.report.per_sample.size(), plan_->set2.size());
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.rows[k].classification_ratio, b.rows[k].classification_ratio);
    EXPECT_EQ(a.rows[k].n_above, b.rows[k].n_above);
  }
  EXPECT_GE(a.rows[2].n_above, a.rows[1].n_above);
  std::ostringstream csv;
  write_sweep_csv(csv, a);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "theta,n_above,classification_ratio,flag");
}

TEST_F(Pipeline, SweepEvaluationSets) {
  const std::vector<double> thresholds{0.0};
  const SeededRng rng(8);
  SweepOptions opts;
  opts.eval_set = EvalSet::kHeldOut;
  EXPECT_THROW(relearn_sweep(*plan_, *q2_, thresholds, quick_config(), rng, opts), InvalidArgument);
  opts.held_out = data_.get();
  const SweepResult held = relearn_sweep(*plan_, *q2_, thresholds, quick_config(), rng, opts);
  opts.eval_set = EvalSet::kSet0;
  const SweepResult all = relearn_sweep(*plan_, *q2_, thresholds, quick_config(), rng, opts);
  EXPECT_EQ(held.rows[0].classification_ratio, all.rows[0].classification_ratio);
  EXPECT_THROW(relearn_sweep(*plan_, *q2_, std::vector<double>{-1.0}, quick_config(), rng), InvalidArgument);
}

TEST_F(Pipeline, ParentUntouched) {
  SeededRng rng(9);
  train_child(*plan_, ChildSet::kSet2, quick_config(), rng);
  relearn_sweep(*plan_, *q2_, std::vector<double>{0.5}, quick_config(), rng);
  EXPECT_EQ(model_to_string(*parent_), parent_bytes_);
}

TEST_F(Pipeline, ScatterExportCoversSetTwo) {
  const KlReport r = kl_divergence(*parent_, *q2_, plan_->focus_data.subset(plan_->set2));
  const auto dir = testing::fresh_dir("scatter");
  export_scatter(r, 0.5, dir / "s.csv");
  const std::string text = testing::slurp(dir / "s.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), plan_->set2.size() + 1);
}

TEST(BuildPlan, PerfectParentIsDegenerate) {
  SeededRng rng(10);
  const LabeledDataset ds = make_overlap_fixture(60, 0.0, rng);
  DbnTrainConfig cfg = quick_config();
  auto parent = std::make_shared<const Dbn>(train_dbn(ds, cfg, rng).model);
  ASSERT_EQ(accuracy(*parent, ds), 1.0);
  try {
    build_plan(parent, ds, ds.class_labels);
    FAIL() << "expected DegeneratePartition";
  } catch (const DegeneratePartition& e) {
    EXPECT_EQ(e.n_correct(), ds.size());
    EXPECT_EQ(e.n_wrong(), 0u);
  }
}

TEST(BuildPlan, FocusFiltersAndUsesFullArgmax) {
  // Class "c" absorbs every prediction; samples of a and b are all wrong.
  SoftmaxHead head(1, 3);
  head.bias = {0.0, 0.0, 5.0};
  auto parent = std::make_shared<const Dbn>(std::vector<Rbm>{Rbm(1, 1)}, head, std::vector<std::string>{"a", "b", "c"});
  LabeledDataset ds;
  ds.class_labels = {"a", "b", "c"};
  for (std::uint64_t i = 0; i < 9; ++i) ds.samples.push_back({{0.5}, i % 3, {}, {}, i});
  EXPECT_THROW(build_plan(parent, ds, {"a", "b"}), DegeneratePartition);
  head.bias = {5.0, 0.0, 0.0};
  parent = std::make_shared<const Dbn>(std::vector<Rbm>{Rbm(1, 1)}, head, std::vector<std::string>{"a", "b", "c"});
  const RelearnPlan plan = build_plan(parent, ds, {"b", "a"});
  EXPECT_EQ(plan.set0.size(), 6u);
  EXPECT_EQ(plan.set1.size(), 3u);
  for (const auto& s : plan.focus_data.samples) EXPECT_LT(s.label, 2u);
  EXPECT_THROW(build_plan(parent, ds, {"a", "zzz"}), InvalidArgument);
}

TEST(FocusDistribution, RenormalizesSubset) {
  SoftmaxHead head(1, 3);
  head.bias = {0.0, std::log(3.0), 2.0};
  const Dbn model({Rbm(1, 1)}, head, {"a", "b", "c"});
  const Vector p = focus_distribution(model, Vector{0.5}, {"b", "a"});
  EXPECT_NEAR(p[0], 0.75, 1e-12);
  EXPECT_NEAR(p[1], 0.25, 1e-12);
}

}  // namespace
}  // namespace adbn

// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "adbn/model_io.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "support/oracles.hpp"

namespace adbn::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& extra, double overlap = 0.6,
                      std::size_t n = 60) {
  const auto p = dir / "run.ini";
  std::ofstream(p) << "[run]\nseed = 3\noutput_dir = out\n"
                   << "[data]\nsource = fixture\nfixture_n_per_class = " << n
                   << "\nfixture_overlap = " << overlap << "\n"
                   << "[rbm]\nepochs = 8\ngen_threshold = 0.0003\n"
                   << "[dbn]\nhead_epochs = 600\n"
                   << "[relearn]\nfocus_classes = anger,disgust\nthresholds = 2,0.5\n"
                   << extra;
  return p;
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  return names;
}

TEST(Config, MissingFileNamesPath) {
  const auto r = invoke({"train", "-c", "/nonexistent/run.ini"});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("/nonexistent/run.ini"), std::string::npos);
}

TEST(Config, UnknownKeyNamed) {
  try {
    parse_config("[rbm]\nlearnin_rate = 0.1\n", ".");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "rbm.learnin_rate");
  }
  const auto dir = testing::fresh_dir("cli_unknown");
  std::ofstream(dir / "bad.ini") << "[bogus]\nx = 1\n";
  const auto r = invoke({"train", "-c", (dir / "bad.ini").string()});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("bogus.x"), std::string::npos);
}

TEST(Config, BadValuesNamed) {
  auto key_of = [](const std::string& text) {
    try {
      parse_config(text, ".");
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("[rbm]\nepochs = many\n"), "rbm.epochs");
  EXPECT_EQ(key_of("[data]\nsource = parquet\n"), "data.source");
  EXPECT_EQ(key_of("[relearn]\nthresholds = 1,-2\n"), "relearn.thresholds");
  EXPECT_EQ(key_of("[relearn]\neval_set = heldout\n"), "relearn.eval_set");
  EXPECT_EQ(key_of("[data]\nsource = csv\n"), "data.csv_path");
}

TEST(Config, ParsesEveryKnownKey) {
  const RunConfig c = parse_config(
      "[run]\nseed = 9\noutput_dir = o\n"
      "[data]\nsource = csv\ncsv_path = d.csv\ntest_fraction = 0.2\n"
      "[rbm]\nlearning_rate = 0.2\ncd_steps = 2\nepochs = 4\nbatch_size = 5\ngen_threshold = 0.1\n"
      "annihilate_threshold = 0.02\ninherit_noise = 0.03\nmax_hidden = 20\nwd_window = 3\ninit_weight_scale = 0.2\n"
      "[dbn]\ninitial_hidden = 5\nlayer_wd_threshold = 0.001\nlayer_energy_threshold = -1\nmax_layers = 2\n"
      "head_learning_rate = 0.1\nhead_epochs = 10\n"
      "[relearn]\nfocus_classes = a, b\nthresholds = inf, 0.15\neval_set = heldout\nplan_data = test\n"
      "histogram_bins = 7\n",
      "/base");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.output_dir, fs::path("/base/o"));
  EXPECT_EQ(c.data.csv, fs::path("/base/d.csv"));
  EXPECT_EQ(c.train.rbm.cd_steps, 2u);
  EXPECT_EQ(c.train.rbm.max_hidden, 20u);
  EXPECT_EQ(c.train.initial_hidden, 5u);
  EXPECT_EQ(c.train.max_layers, 2u);
  EXPECT_EQ(c.focus_classes, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(c.thresholds.size(), 2u);
  EXPECT_TRUE(std::isinf(c.thresholds[0]));
  EXPECT_EQ(c.eval_set, EvalSet::kHeldOut);
  EXPECT_EQ(c.plan_data, PlanData::kTest);
  EXPECT_EQ(c.histogram_bins, 7u);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kUsageError);
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsageError);
  EXPECT_EQ(invoke({"train"}).code, kUsageError);
}

TEST(Cli, DataErrorExitCode) {
  const auto dir = testing::fresh_dir("cli_data_error");
  std::ofstream(dir / "run.ini") << "[data]\nsource = csv\ncsv_path = missing.csv\n";
  const auto r = invoke({"train", "-c", (dir / "run.ini").string()});
  EXPECT_EQ(r.code, kDataError);
  EXPECT_NE(r.err.find("missing.csv"), std::string::npos);
}

TEST(Cli, TrainEvalRelearnManifestAndDeterminism) {
  const auto dir = testing::fresh_dir("cli_pipeline");
  const auto cfg = write_config(dir, "").string();
  ASSERT_EQ(invoke({"train", "-c", cfg}).code, kOk);
  ASSERT_EQ(invoke({"eval", "-c", cfg}).code, kOk);
  const auto rel = invoke({"relearn", "-c", cfg});
  ASSERT_EQ(rel.code, kOk) << rel.err;

  const fs::path out = dir / "out";
  EXPECT_EQ(listing(out), (std::set<std::string>{"model.json", "train_epochs.csv", "train_events.csv",
                                                 "train_layers.csv", "head_loss.csv", "eval", "relearn"}));
  EXPECT_EQ(listing(out / "eval"),
            (std::set<std::string>{"confusion.csv", "class_report.csv", "ratio_table.csv", "report.txt"}));
  EXPECT_EQ(listing(out / "relearn"),
            (std::set<std::string>{"summary.txt", "kl_hist_p_q1.csv", "kl_hist_p_q2.csv", "kl_aggregate.txt",
                                   "sweep.csv", "scatter_theta_0.csv", "scatter_theta_1.csv"}));

  std::istringstream agg(testing::slurp(out / "relearn" / "kl_aggregate.txt"));
  std::string name1, name2;
  double kl1 = 0, kl2 = 0;
  agg >> name1 >> kl1 >> name2 >> kl2;
  EXPECT_EQ(name1, "KL(P,Q1)");
  EXPECT_EQ(name2, "KL(P,Q2)");
  EXPECT_GT(kl2, kl1);

  const Dbn model = load_model(out / "model.json");
  save_model(model, dir / "resaved.json");
  EXPECT_EQ(testing::slurp(dir / "resaved.json"), testing::slurp(out / "model.json"));

  std::map<std::string, std::string> first;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.is_regular_file()) first[fs::relative(e.path(), out).string()] = testing::slurp(e.path());
  fs::remove_all(out);
  ASSERT_EQ(invoke({"train", "-c", cfg}).code, kOk);
  ASSERT_EQ(invoke({"eval", "-c", cfg}).code, kOk);
  ASSERT_EQ(invoke({"relearn", "-c", cfg}).code, kOk);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const auto rel_path = fs::relative(e.path(), out).string();
    ASSERT_TRUE(first.count(rel_path)) << rel_path;
    EXPECT_EQ(first[rel_path], testing::slurp(e.path())) << rel_path;
    ++compared;
  }
  EXPECT_EQ(compared, first.size());
}

TEST(Cli, EvalMacroLineIsMeanOfRatios) {
  const auto dir = testing::fresh_dir("cli_eval");
  const auto cfg = write_config(dir, "", 0.6, 40).string();
  ASSERT_EQ(invoke({"train", "-c", cfg}).code, kOk);
  ASSERT_EQ(invoke({"eval", "-c", cfg}).code, kOk);
  std::istringstream in(testing::slurp(dir / "out" / "eval" / "class_report.csv"));
  std::string line;
  std::getline(in, line);
  double sum = 0.0, macro = -1.0;
  int n = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f[0] == "macro") {
      macro = std::stod(f[8]);
    } else {
      sum += std::stod(f[8]);
      ++n;
    }
  }
  ASSERT_EQ(n, 2);
  EXPECT_NEAR(macro, sum / n, 1e-9);
}

TEST(Cli, EvalOnSeparableFixtureIsDiagonal) {
  const auto dir = testing::fresh_dir("cli_diag");
  const auto cfg = write_config(dir, "", 0.0, 40).string();
  ASSERT_EQ(invoke({"train", "-c", cfg}).code, kOk);
  ASSERT_EQ(invoke({"eval", "-c", cfg}).code, kOk);
  std::ifstream in(dir / "out" / "eval" / "confusion.csv");
  const ConfusionMatrix cm = read_confusion_csv(in);
  EXPECT_EQ(cm(0, 1), 0u);
  EXPECT_EQ(cm(1, 0), 0u);
  EXPECT_EQ(cm(0, 0), 40u);
  const auto rel = invoke({"relearn", "-c", cfg});
  EXPECT_EQ(rel.code, kDegeneratePartition);
  EXPECT_NE(rel.err.find("set2=0"), std::string::npos);
}

TEST(Cli, EvalFromConfusionCsv) {
  const auto dir = testing::fresh_dir("cli_table");
  {
    std::ofstream f(dir / "table.csv");
    write_confusion_csv(f, testing::published_confusion());
  }
  const auto cfg = write_config(dir, "").string();
  const auto r = invoke({"eval", "-c", cfg, "--confusion", (dir / "table.csv").string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("87.4%"), std::string::npos);
  const std::string table = testing::slurp(dir / "out" / "eval" / "ratio_table.csv");
  EXPECT_NE(table.find("Anger,78.4"), std::string::npos);
  std::istringstream in(testing::slurp(dir / "out" / "eval" / "class_report.csv"));
  std::string line;
  std::getline(in, line);
  for (std::size_t c = 0; c < 8; ++c) {
    std::getline(in, line);
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    EXPECT_EQ(f[0], testing::emotion_labels()[c]);
    EXPECT_NEAR(std::stod(f[7]), testing::published_f1()[c], 0.01) << f[0];
  }
}

TEST(Cli, FixtureCommand) {
  const auto dir = testing::fresh_dir("cli_fixture");
  const auto path = (dir / "f.csv").string();
  ASSERT_EQ(invoke({"fixture", "-n", "25", "--overlap", "0.3", "--seed", "4", "-o", path}).code, kOk);
  const std::string first = testing::slurp(path);
  const LabeledDataset ds = load_csv(path);
  EXPECT_EQ(ds.size(), 50u);
  EXPECT_EQ(ds.class_labels, (std::vector<std::string>{"anger", "disgust"}));
  ASSERT_EQ(invoke({"fixture", "-n", "25", "--overlap", "0.3", "--seed", "4", "-o", path}).code, kOk);
  EXPECT_EQ(testing::slurp(path), first);
  EXPECT_EQ(invoke({"fixture", "--overlap", "2", "-o", path}).code, kUsageError);
}

}  // namespace
}  // namespace adbn::cli

// SPDX-License-Identifier: Apache-2.0
#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "adbn/data.hpp"
#include "adbn/dbn.hpp"
#include "adbn/errors.hpp"
#include "adbn/metrics.hpp"
#include "adbn/model_io.hpp"
#include "adbn/relearn.hpp"
#include "cli/config.hpp"

namespace adbn::cli {
namespace fs = std::filesystem;

namespace {

// Derived RNG streams, one per consumer.
enum Stream : std::uint64_t {
  kFixtureStream = 0,
  kSplitStream = 1,
  kParentStream = 2,
  kQ1Stream = 3,
  kQ2Stream = 4,
  kSweepStream = 5,
};

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << contents;
  if (!out) throw DataError(path.string() + ": write failed");
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream buf;
  buf << std::setprecision(std::numeric_limits<double>::max_digits10);
  fn(buf);
  write_file(path, buf.str());
}

struct Data {
  LabeledDataset train;
  std::optional<LabeledDataset> test;
};

Data load_data(const RunConfig& cfg) {
  const SeededRng master(cfg.seed);
  LabeledDataset all;
  switch (cfg.data.source) {
    case DataSpec::Source::kFixture: {
      SeededRng rng = master.derive(kFixtureStream);
      all = make_overlap_fixture(cfg.data.fixture_n_per_class, cfg.data.fixture_overlap, rng);
      break;
    }
    case DataSpec::Source::kCsv:
      all = load_csv(cfg.data.csv);
      break;
    case DataSpec::Source::kIdx:
      all = load_idx(cfg.data.idx_images, cfg.data.idx_labels);
      break;
  }
  if (cfg.data.test_fraction == 0.0) return {std::move(all), std::nullopt};
  SeededRng rng = master.derive(kSplitStream);
  auto [train, test] = split(all, 1.0 - cfg.data.test_fraction, rng);
  return {std::move(train), std::move(test)};
}

fs::path ensure_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

int cmd_train(const std::string& config_path, std::ostream& out) {
  const RunConfig cfg = load_config(config_path);
  const Data data = load_data(cfg);
  SeededRng rng = SeededRng(cfg.seed).derive(kParentStream);
  const DbnTrainResult result = train_dbn(data.train, cfg.train, rng);

  const fs::path dir = ensure_dir(cfg.output_dir);
  save_model(result.model, dir / "model.json");
  const TrainLog& log = result.log;
  write_with(dir / "train_epochs.csv", [&](std::ostream& o) {
    o << "layer,epoch,reconstruction_error,n_hidden,wd_mean,wd_max\n";
    for (const auto& e : log.epochs) {
      o << e.layer << ',' << e.record.epoch << ',' << e.record.reconstruction_error << ','
        << e.record.n_hidden << ',' << e.record.wd_mean << ',' << e.record.wd_max << '\n';
    }
  });
  write_with(dir / "train_events.csv", [&](std::ostream& o) {
    o << "layer,epoch,kind,neuron,parent,statistic\n";
    for (const auto& e : log.events) {
      o << e.layer << ',' << e.epoch << ',' << to_string(e.kind) << ',' << e.neuron << ','
        << e.parent << ',' << e.statistic << '\n';
    }
  });
  write_with(dir / "train_layers.csv", [&](std::ostream& o) {
    o << "layer,total_wd,mean_energy,generate,capped\n";
    for (const auto& d : log.layer_decisions) {
      o << d.layer << ',' << d.total_wd << ',' << d.mean_energy << ',' << d.generate << ','
        << d.capped << '\n';
    }
  });
  write_with(dir / "head_loss.csv", [&](std::ostream& o) {
    o << "epoch,cross_entropy\n";
    for (std::size_t i = 0; i < log.head_loss.size(); ++i) o << i << ',' << log.head_loss[i] << '\n';
  });

  const ConfusionMatrix cm = confusion(result.model, data.train);
  out << "trained " << result.model.layers().size() << " layer(s), hidden sizes:";
  for (const auto& l : result.model.layers()) out << ' ' << l.n_hidden();
  out << "; training accuracy " << std::fixed << std::setprecision(4)
      << class_report(cm).accuracy << std::defaultfloat << '\n'
      << "model written to " << (dir / "model.json").string() << '\n';
  return kOk;
}

void write_reports(const fs::path& dir, const ConfusionMatrix& cm) {
  const ClassReport report = class_report(cm);
  write_with(dir / "confusion.csv", [&](std::ostream& o) { write_confusion_csv(o, cm); });
  write_with(dir / "class_report.csv", [&](std::ostream& o) { write_class_report_csv(o, report); });
  write_with(dir / "ratio_table.csv", [&](std::ostream& o) { write_ratio_table_csv(o, report); });
  write_with(dir / "report.txt", [&](std::ostream& o) { write_report_text(o, cm, report); });
}

int cmd_eval(const std::string& config_path, const std::string& model_path,
             const std::string& confusion_path, std::ostream& out) {
  const RunConfig cfg = load_config(config_path);
  const fs::path dir = ensure_dir(cfg.output_dir / "eval");
  ConfusionMatrix cm;
  if (!confusion_path.empty()) {
    std::ifstream in(confusion_path);
    if (!in) throw DataError(confusion_path + ": cannot open confusion matrix");
    cm = read_confusion_csv(in);
  } else {
    const fs::path model_file = model_path.empty() ? cfg.output_dir / "model.json" : fs::path(model_path);
    const Dbn model = load_model(model_file);
    const Data data = load_data(cfg);
    const LabeledDataset& ds = data.test ? *data.test : data.train;
    cm = confusion(model, align_labels(ds, model.class_labels()));
  }
  write_reports(dir, cm);
  out << "evaluated " << cm.total() << " samples; macro classification ratio " << std::fixed
      << std::setprecision(1) << 100.0 * class_report(cm).macro_ratio << std::defaultfloat
      << "%; reports in " << dir.string() << '\n';
  return kOk;
}

int cmd_relearn(const std::string& config_path, const std::string& model_path, std::ostream& out) {
  const RunConfig cfg = load_config(config_path);
  if (cfg.focus_classes.empty()) throw ConfigError("relearn.focus_classes", "required for relearn");
  if (cfg.thresholds.empty()) throw ConfigError("relearn.thresholds", "required for relearn");

  const fs::path model_file = model_path.empty() ? cfg.output_dir / "model.json" : fs::path(model_path);
  auto parent = std::make_shared<const Dbn>(load_model(model_file));
  const Data data = load_data(cfg);
  const LabeledDataset& plan_source = cfg.plan_data == PlanData::kTest ? *data.test : data.train;

  const RelearnPlan plan = build_plan(parent, plan_source, cfg.focus_classes);
  const SeededRng master(cfg.seed);
  SeededRng q1_rng = master.derive(kQ1Stream);
  SeededRng q2_rng = master.derive(kQ2Stream);
  const Dbn q1 = train_child(plan, ChildSet::kSet1, cfg.train, q1_rng);
  const Dbn q2 = train_child(plan, ChildSet::kSet2, cfg.train, q2_rng);

  const KlReport kl_q1 = kl_divergence(*parent, q1, plan.focus_data, "P", "Q1");
  const KlReport kl_q2 = kl_divergence(*parent, q2, plan.focus_data, "P", "Q2");

  SweepOptions options;
  options.eval_set = cfg.eval_set;
  if (cfg.eval_set == EvalSet::kHeldOut) {
    options.held_out = cfg.plan_data == PlanData::kTest ? &data.train : &*data.test;
  }
  const SweepResult sweep =
      relearn_sweep(plan, q2, cfg.thresholds, cfg.train, master.derive(kSweepStream), options);

  const fs::path dir = ensure_dir(cfg.output_dir / "relearn");
  write_with(dir / "summary.txt", [&](std::ostream& o) {
    write_plan_summary(o, plan);
    o << '\n';
    write_sweep_summary(o, sweep);
  });
  write_with(dir / "kl_hist_p_q1.csv", [&](std::ostream& o) {
    write_histogram_csv(o, kl_histogram(kl_q1.values(), cfg.histogram_bins));
  });
  write_with(dir / "kl_hist_p_q2.csv", [&](std::ostream& o) {
    write_histogram_csv(o, kl_histogram(kl_q2.values(), cfg.histogram_bins));
  });
  write_with(dir / "kl_aggregate.txt", [&](std::ostream& o) {
    o << "KL(P,Q1) " << kl_q1.aggregate << '\n' << "KL(P,Q2) " << kl_q2.aggregate << '\n';
  });
  write_with(dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, sweep); });
  for (std::size_t k = 0; k < cfg.thresholds.size(); ++k) {
    write_with(dir / ("scatter_theta_" + std::to_string(k) + ".csv"),
               [&](std::ostream& o) { write_scatter_csv(o, sweep.report, cfg.thresholds[k]); });
  }

  const auto self_accuracy = [&](const Dbn& child, const std::vector<std::uint64_t>& ids) {
    return class_report(confusion(child, plan.focus_data.subset(ids))).accuracy;
  };
  out << "set0=" << plan.set0.size() << " set1=" << plan.set1.size()
      << " set2=" << plan.set2.size() << '\n'
      << "Q1 accuracy on set1=" << self_accuracy(q1, plan.set1)
      << " Q2 accuracy on set2=" << self_accuracy(q2, plan.set2) << '\n'
      << "KL(P,Q1)=" << kl_q1.aggregate << " KL(P,Q2)=" << kl_q2.aggregate << '\n';
  for (const auto& row : sweep.rows) {
    out << "theta=" << row.theta << " n_above=" << row.n_above << ' '
        << (row.empty ? std::string("empty") : "ratio=" + std::to_string(row.classification_ratio))
        << '\n';
  }
  out << "artifacts in " << dir.string() << '\n';
  return kOk;
}

int cmd_fixture(std::size_t n_per_class, double overlap, std::uint64_t seed,
                const std::string& out_path, std::ostream& out) {
  SeededRng rng = SeededRng(seed).derive(kFixtureStream);
  const LabeledDataset ds = make_overlap_fixture(n_per_class, overlap, rng);
  save_csv(ds, out_path);
  out << "wrote " << ds.size() << " samples to " << out_path << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive DBN training and parent/child KL re-learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string model_path;
  std::string confusion_path;

  auto* train = app.add_subcommand("train", "Train a parent model from a config file");
  train->add_option("-c,--config", config_path, "Run config (INI)")->required();

  auto* eval = app.add_subcommand("eval", "Write confusion matrix and class reports");
  eval->add_option("-c,--config", config_path, "Run config (INI)")->required();
  eval->add_option("-m,--model", model_path, "Model file (default: <output_dir>/model.json)");
  eval->add_option("--confusion", confusion_path,
                   "Report on an existing confusion-matrix CSV instead of evaluating a model");

  auto* relearn = app.add_subcommand("relearn", "Run the parent/child KL re-learning pipeline");
  relearn->add_option("-c,--config", config_path, "Run config (INI)")->required();
  relearn->add_option("-m,--model", model_path, "Parent model (default: <output_dir>/model.json)");

  std::size_t n_per_class = 500;
  double overlap = 0.6;
  std::uint64_t seed = 1;
  std::string fixture_out;
  auto* fixture = app.add_subcommand("fixture", "Write the synthetic overlap dataset as CSV");
  fixture->add_option("-n,--n-per-class", n_per_class, "Samples per class")->check(CLI::PositiveNumber);
  fixture->add_option("--overlap", overlap, "Overlap in [0,1]")->check(CLI::Range(0.0, 1.0));
  fixture->add_option("--seed", seed, "Seed");
  fixture->add_option("-o,--out", fixture_out, "Output CSV path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (*train) return cmd_train(config_path, out);
    if (*eval) return cmd_eval(config_path, model_path, confusion_path, out);
    if (*relearn) return cmd_relearn(config_path, model_path, out);
    if (*fixture) return cmd_fixture(n_per_class, overlap, seed, fixture_out, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DegeneratePartition& e) {
    err << "error: " << e.what() << '\n';
    return kDegeneratePartition;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace adbn::cli

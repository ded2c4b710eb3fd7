// SPDX-License-Identifier: Apache-2.0
#include "cli/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace adbn::cli {
namespace {

namespace pt = boost::property_tree;

double to_double(const std::string& key, const std::string& text) {
  const std::string t = boost::algorithm::trim_copy(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || std::isnan(v)) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& text) {
  const std::string t = boost::algorithm::trim_copy(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::vector<std::string> to_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

std::filesystem::path to_path(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p = boost::algorithm::trim_copy(text);
  return p.is_absolute() ? p : base / p;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.seed", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.seed = to_count(k, v); }},
      {"run.output_dir", [](RunConfig& c, const auto&, const auto& v, const auto& b) { c.output_dir = to_path(b, v); }},

      {"data.source", [](RunConfig& c, const auto& k, const auto& v, const auto&) {
         const auto s = boost::algorithm::trim_copy(v);
         if (s == "fixture") c.data.source = DataSpec::Source::kFixture;
         else if (s == "csv") c.data.source = DataSpec::Source::kCsv;
         else if (s == "idx") c.data.source = DataSpec::Source::kIdx;
         else throw ConfigError(k, "expected fixture, csv or idx, got '" + v + "'");
       }},
      {"data.csv_path", [](RunConfig& c, const auto&, const auto& v, const auto& b) { c.data.csv = to_path(b, v); }},
      {"data.idx_images", [](RunConfig& c, const auto&, const auto& v, const auto& b) { c.data.idx_images = to_path(b, v); }},
      {"data.idx_labels", [](RunConfig& c, const auto&, const auto& v, const auto& b) { c.data.idx_labels = to_path(b, v); }},
      {"data.fixture_n_per_class", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.data.fixture_n_per_class = to_count(k, v); }},
      {"data.fixture_overlap", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.data.fixture_overlap = to_double(k, v); }},
      {"data.test_fraction", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.data.test_fraction = to_double(k, v); }},

      {"rbm.learning_rate", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.learning_rate = to_double(k, v); }},
      {"rbm.cd_steps", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.cd_steps = to_count(k, v); }},
      {"rbm.epochs", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.epochs = to_count(k, v); }},
      {"rbm.batch_size", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.batch_size = to_count(k, v); }},
      {"rbm.gen_threshold", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.gen_threshold = to_double(k, v); }},
      {"rbm.annihilate_threshold", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.annihilate_threshold = to_double(k, v); }},
      {"rbm.inherit_noise", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.inherit_noise = to_double(k, v); }},
      {"rbm.max_hidden", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.max_hidden = to_count(k, v); }},
      {"rbm.wd_window", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.wd_window = to_count(k, v); }},
      {"rbm.init_weight_scale", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.rbm.init_weight_scale = to_double(k, v); }},

      {"dbn.initial_hidden", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.initial_hidden = to_count(k, v); }},
      {"dbn.layer_wd_threshold", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.layer_wd_threshold = to_double(k, v); }},
      {"dbn.layer_energy_threshold", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.layer_energy_threshold = to_double(k, v); }},
      {"dbn.max_layers", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.max_layers = to_count(k, v); }},
      {"dbn.head_learning_rate", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.head_learning_rate = to_double(k, v); }},
      {"dbn.head_epochs", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.train.head_epochs = to_count(k, v); }},

      {"relearn.focus_classes", [](RunConfig& c, const auto&, const auto& v, const auto&) { c.focus_classes = to_list(v); }},
      {"relearn.thresholds", [](RunConfig& c, const auto& k, const auto& v, const auto&) {
         c.thresholds.clear();
         for (const auto& t : to_list(v)) c.thresholds.push_back(to_double(k, t));
       }},
      {"relearn.eval_set", [](RunConfig& c, const auto& k, const auto& v, const auto&) {
         const auto s = boost::algorithm::trim_copy(v);
         if (s == "set2") c.eval_set = EvalSet::kSet2;
         else if (s == "set0") c.eval_set = EvalSet::kSet0;
         else if (s == "heldout") c.eval_set = EvalSet::kHeldOut;
         else throw ConfigError(k, "expected set2, set0 or heldout, got '" + v + "'");
       }},
      {"relearn.plan_data", [](RunConfig& c, const auto& k, const auto& v, const auto&) {
         const auto s = boost::algorithm::trim_copy(v);
         if (s == "train") c.plan_data = PlanData::kTrain;
         else if (s == "test") c.plan_data = PlanData::kTest;
         else throw ConfigError(k, "expected train or test, got '" + v + "'");
       }},
      {"relearn.histogram_bins", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.histogram_bins = to_count(k, v); }},
  };
  return table;
}

void validate(const RunConfig& c) {
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", std::string("invalid training parameters: ") + e.what());
  }
  switch (c.data.source) {
    case DataSpec::Source::kCsv:
      if (c.data.csv.empty()) throw ConfigError("data.csv_path", "required when data.source = csv");
      break;
    case DataSpec::Source::kIdx:
      if (c.data.idx_images.empty()) throw ConfigError("data.idx_images", "required when data.source = idx");
      if (c.data.idx_labels.empty()) throw ConfigError("data.idx_labels", "required when data.source = idx");
      break;
    case DataSpec::Source::kFixture:
      if (c.data.fixture_n_per_class < 2) throw ConfigError("data.fixture_n_per_class", "must be >= 2");
      if (!(c.data.fixture_overlap >= 0.0 && c.data.fixture_overlap <= 1.0))
        throw ConfigError("data.fixture_overlap", "must lie in [0,1]");
      break;
  }
  if (!(c.data.test_fraction >= 0.0 && c.data.test_fraction < 1.0))
    throw ConfigError("data.test_fraction", "must lie in [0,1)");
  if (c.data.test_fraction == 0.0) {
    if (c.eval_set == EvalSet::kHeldOut)
      throw ConfigError("relearn.eval_set", "heldout requires data.test_fraction > 0");
    if (c.plan_data == PlanData::kTest)
      throw ConfigError("relearn.plan_data", "test requires data.test_fraction > 0");
  }
  for (double t : c.thresholds) {
    if (!(t >= 0.0)) throw ConfigError("relearn.thresholds", "thresholds must be >= 0");
  }
  if (c.histogram_bins < 1) throw ConfigError("relearn.histogram_bins", "must be >= 1");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.message() + " (line " +
                              std::to_string(e.line()) + ")");
  }

  RunConfig config;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ConfigError(section, "keys must live inside a [section]");
    }
    for (const auto& [name, value] : entries) {
      const std::string key = section + "." + name;
      const auto it = setters().find(key);
      if (it == setters().end()) throw ConfigError(key, "unknown key");
      it->second(config, key, value.data(), base_dir);
    }
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace adbn::cli

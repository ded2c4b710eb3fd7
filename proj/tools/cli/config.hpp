// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "adbn/dbn.hpp"
#include "adbn/relearn.hpp"

namespace adbn::cli {

/// Invalid or unreadable run configuration. `key()` is "section.name" when
/// the problem is tied to one entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct DataSpec {
  enum class Source { kFixture, kCsv, kIdx };
  Source source = Source::kFixture;
  std::filesystem::path csv;
  std::filesystem::path idx_images;
  std::filesystem::path idx_labels;
  std::size_t fixture_n_per_class = 500;
  double fixture_overlap = 0.6;
  double test_fraction = 0.0;  // 0: no split
};

enum class PlanData { kTrain, kTest };

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  DataSpec data;
  DbnTrainConfig train;
  std::vector<std::string> focus_classes;
  std::vector<double> thresholds;
  EvalSet eval_set = EvalSet::kSet2;
  PlanData plan_data = PlanData::kTrain;
  std::size_t histogram_bins = 20;
};

/// Parses an INI file. Relative paths resolve against the file's directory.
/// Unknown sections or keys, unparsable values and out-of-range values all
/// raise ConfigError naming the key.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

}  // namespace adbn::cli

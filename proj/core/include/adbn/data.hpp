// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adbn/numerics.hpp"

namespace adbn {

struct LabeledSample {
  Vector input;  // components in [0,1]
  std::size_t label = 0;
  std::optional<double> valence;  // [-1,1]
  std::optional<double> arousal;  // [-1,1]
  std::uint64_t id = 0;
};

struct LabeledDataset {
  std::vector<LabeledSample> samples;
  std::vector<std::string> class_labels;
  /// Per-column bounds used by min-max normalization; empty if never normalized.
  Vector feature_min;
  Vector feature_max;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::size_t input_size() const { return samples.empty() ? 0 : samples.front().input.size(); }

  std::vector<Vector> inputs() const;
  std::vector<std::size_t> labels() const;

  /// Samples whose id is listed, in the order given. Throws on unknown ids.
  LabeledDataset subset(std::span<const std::uint64_t> ids) const;

  /// Checks every documented invariant; throws DataError on the first violation.
  void validate() const;
};

/// Rescales every feature column to [0,1] and records the original bounds.
/// A constant column maps to 0.
void normalize_features(LabeledDataset& ds);

/// Reorders `ds` labels to `target` by name. Throws InvalidArgument when a
/// dataset label is missing from `target`.
LabeledDataset align_labels(const LabeledDataset& ds, const std::vector<std::string>& target);

struct CsvSchema {
  /// Allowed labels in class-index order. Empty: the sorted set of labels seen.
  std::vector<std::string> class_labels;
  bool normalize = true;
};

/// Reads `label[,valence][,arousal],f0,f1,...` with a header row. Sample ids
/// are 0-based data row numbers. Errors name the offending line.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes the same layout load_csv reads; values use max_digits10 precision.
void save_csv(const LabeledDataset& ds, const std::filesystem::path& path);

/// Standard big-endian IDX pair (0x00000803 images, 0x00000801 labels).
/// Pixels are scaled by 1/255; labels become "0".."max".
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Stratified split; `train_fraction` of every class goes to the first part.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double train_fraction,
                                                SeededRng& rng);

/// Two-class 2-D Gaussian blobs ("anger", "disgust"), unit variance, centroid
/// distance 8 * (1 - overlap) along the diagonal. Inputs are the min-max
/// normalized coordinates; valence/arousal are the same coordinates mapped
/// to [-1,1].
LabeledDataset make_overlap_fixture(std::size_t n_per_class, double overlap, SeededRng& rng);

}  // namespace adbn

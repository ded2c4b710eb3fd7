// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "adbn/data.hpp"
#include "adbn/numerics.hpp"
#include "adbn/rbm.hpp"

namespace adbn {

/// Softmax classifier over the top-layer features.
struct SoftmaxHead {
  DenseMatrix weights;  // features x classes
  Vector bias;          // classes

  SoftmaxHead() = default;
  SoftmaxHead(std::size_t n_features, std::size_t n_classes)
      : weights(n_features, n_classes), bias(n_classes, 0.0) {}

  std::size_t n_features() const noexcept { return weights.rows(); }
  std::size_t n_classes() const noexcept { return bias.size(); }

  Vector logits(std::span<const double> features) const;
  Vector predict(std::span<const double> features) const { return softmax(logits(features)); }

  friend bool operator==(const SoftmaxHead&, const SoftmaxHead&) = default;
};

class Dbn {
 public:
  Dbn() = default;
  Dbn(std::vector<Rbm> layers, SoftmaxHead head, std::vector<std::string> class_labels);

  const std::vector<Rbm>& layers() const noexcept { return layers_; }
  const SoftmaxHead& head() const noexcept { return head_; }
  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
  std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().n_visible(); }
  std::size_t feature_size() const { return layers_.empty() ? 0 : layers_.back().n_hidden(); }

  /// Appends a layer on top; its n_visible must equal the current top's n_hidden.
  /// The head is reset to zeros of the new feature width.
  void append_layer(Rbm layer);
  /// Only the top layer is mutable; lower layers are frozen.
  Rbm& top_layer();
  void set_head(SoftmaxHead head);

  Vector propagate(std::span<const double> v) const;
  Vector predict_proba(std::span<const double> v) const;
  std::size_t predict_label(std::span<const double> v) const;

  /// Checks layer chaining and head widths.
  bool consistent() const;

  friend bool operator==(const Dbn&, const Dbn&) = default;

 private:
  std::vector<Rbm> layers_;
  SoftmaxHead head_;
  std::vector<std::string> class_labels_;
};

struct DbnTrainConfig {
  RbmTrainConfig rbm;
  std::size_t initial_hidden = 8;
  double layer_wd_threshold = 5e-5;
  double layer_energy_threshold = 0.0;
  std::size_t max_layers = 3;
  double head_learning_rate = 0.3;
  std::size_t head_epochs = 3000;

  void validate() const;
};

struct LayerDecision {
  std::size_t layer = 0;  // index of the layer just trained
  double total_wd = 0.0;
  double mean_energy = 0.0;
  bool generate = false;
  bool capped = false;  // criterion met but max_layers reached

  friend bool operator==(const LayerDecision&, const LayerDecision&) = default;
};

struct LayerEpochRecord {
  std::size_t layer = 0;
  RbmEpochRecord record;

  friend bool operator==(const LayerEpochRecord&, const LayerEpochRecord&) = default;
};

struct TrainLog {
  std::vector<LayerEpochRecord> epochs;
  std::vector<StructuralEvent> events;
  std::vector<LayerDecision> layer_decisions;
  std::vector<double> head_loss;  // mean cross-entropy before each head epoch, then final

  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

Vector propagate(const Dbn& dbn, std::span<const double> v);
Vector predict_proba(const Dbn& dbn, std::span<const double> v);
std::size_t predict_label(const Dbn& dbn, std::span<const double> v);

/// Layer-growth rule: generate iff total WD and mean energy both exceed
/// their thresholds and the stack is below max_layers. On generation a
/// fresh layer (n_visible = top n_hidden) is appended.
LayerDecision maybe_generate_layer(Dbn& dbn, double total_wd, double mean_energy,
                                   const DbnTrainConfig& cfg, SeededRng& rng);

/// Mean of E(v, h) over `data` with h sampled from p(h | v).
double mean_energy(const Rbm& rbm, std::span<const Vector> data, SeededRng& rng);

/// Full-batch gradient descent on mean cross-entropy. Returns the loss trace.
std::vector<double> train_head(SoftmaxHead& head, std::span<const Vector> features,
                               std::span<const std::size_t> labels, double learning_rate,
                               std::size_t epochs);

struct DbnTrainResult {
  Dbn model;
  TrainLog log;
};

DbnTrainResult train_dbn(const LabeledDataset& data, const DbnTrainConfig& cfg, SeededRng& rng);

}  // namespace adbn

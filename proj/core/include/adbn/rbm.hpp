// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "adbn/numerics.hpp"

namespace adbn {

/// Binary-hidden RBM whose hidden layer can grow and shrink during training.
///
/// Weights are stored n_visible x n_hidden, so hidden neuron j owns column j.
/// Visible units take values in [0,1] and are treated as Bernoulli means.
class Rbm {
 public:
  Rbm() = default;
  /// All-zero parameters.
  Rbm(std::size_t n_visible, std::size_t n_hidden);
  Rbm(DenseMatrix weights, Vector visible_bias, Vector hidden_bias);

  /// Weights drawn from N(0, scale^2), zero biases.
  static Rbm random(std::size_t n_visible, std::size_t n_hidden, double scale, SeededRng& rng);

  std::size_t n_visible() const noexcept { return visible_bias_.size(); }
  std::size_t n_hidden() const noexcept { return hidden_bias_.size(); }

  const DenseMatrix& weights() const noexcept { return weights_; }
  DenseMatrix& weights() noexcept { return weights_; }
  const Vector& visible_bias() const noexcept { return visible_bias_; }
  Vector& visible_bias() noexcept { return visible_bias_; }
  const Vector& hidden_bias() const noexcept { return hidden_bias_; }
  Vector& hidden_bias() noexcept { return hidden_bias_; }

  /// p(h_j = 1 | v) for every hidden neuron.
  Vector hidden_activations(std::span<const double> v) const;
  /// p(v_i = 1 | h), the mean-field reconstruction.
  Vector visible_activations(std::span<const double> h) const;

  /// E(v,h) = -a.v - b.h - v^T W h
  double energy(std::span<const double> v, std::span<const double> h) const;

  /// Appends hidden neuron with the given incoming weights and bias.
  void add_hidden(std::span<const double> incoming, double bias);
  void remove_hidden(std::size_t j);

  bool consistent() const;

  friend bool operator==(const Rbm&, const Rbm&) = default;

 private:
  DenseMatrix weights_;
  Vector visible_bias_;
  Vector hidden_bias_;
};

struct RbmTrainConfig {
  double learning_rate = 0.5;
  std::size_t cd_steps = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 10;
  double gen_threshold = 0.05;         // WD above which a neuron splits
  double annihilate_threshold = 0.01;  // mean activation outside [a, 1-a] is removed
  double inherit_noise = 0.01;         // half-width of the uniform noise added to inherited weights
  std::size_t max_hidden = 0;          // 0 means 8 x the initial hidden count
  std::size_t wd_window = 10;
  double init_weight_scale = 0.1;

  /// Throws InvalidArgument naming the first bad field.
  void validate(std::size_t initial_hidden) const;
  std::size_t resolved_max_hidden(std::size_t initial_hidden) const {
    return max_hidden == 0 ? 8 * initial_hidden : max_hidden;
  }
};

/// Walking Distance tracker: per hidden neuron, the last 2*window update
/// magnitudes. WD_j = |var(newest window) - var(preceding window)| with the
/// population variance (divisor n); 0 until both windows are filled.
class WdTracker {
 public:
  WdTracker() = default;
  WdTracker(std::size_t window, std::size_t n_neurons);

  std::size_t window() const noexcept { return window_; }
  std::size_t size() const noexcept { return history_.size(); }
  bool full(std::size_t j) const { return history_.at(j).size() == 2 * window_; }

  /// Records one magnitude per neuron and returns the resulting WD values.
  Vector update(std::span<const double> magnitudes);
  Vector values() const;
  double value(std::size_t j) const;

  void add_neuron();
  void remove_neuron(std::size_t j);
  void clear(std::size_t j);

 private:
  std::size_t window_ = 0;
  std::vector<std::deque<double>> history_;
};

struct StructuralEvent {
  enum class Kind { kGenerated, kGenerationCapped, kAnnihilated, kAnnihilationFloor };

  Kind kind;
  std::size_t neuron = 0;  // index at the time of the event
  std::size_t parent = 0;  // generation only
  double statistic = 0.0;  // WD for generation, mean activation for annihilation
  std::size_t layer = 0;
  std::size_t epoch = 0;

  friend bool operator==(const StructuralEvent&, const StructuralEvent&) = default;
};

std::string to_string(StructuralEvent::Kind kind);

double rbm_energy(const Rbm& rbm, std::span<const double> v, std::span<const double> h);

/// One CD-k step on `batch`. Returns, per hidden neuron, the L2 norm of the
/// update applied to its incoming weight column.
Vector cd_update(Rbm& rbm, std::span<const Vector> batch, const RbmTrainConfig& cfg,
                 SeededRng& rng);

/// Mean squared error between inputs and their one-step mean-field reconstruction.
double reconstruction_error(const Rbm& rbm, std::span<const Vector> batch);

/// Splits every full-window neuron whose WD exceeds cfg.gen_threshold, lowest
/// index first, until `max_hidden` is reached. The child copies the parent's
/// incoming weights and bias plus uniform noise in [-inherit_noise,
/// inherit_noise]; both start with empty WD history.
std::vector<StructuralEvent> maybe_generate_neurons(Rbm& rbm, WdTracker& tracker,
                                                    const RbmTrainConfig& cfg,
                                                    std::size_t max_hidden, SeededRng& rng);

/// Removes neurons whose mean activation over `batch` is below
/// cfg.annihilate_threshold or above 1 - cfg.annihilate_threshold, keeping at
/// least one neuron.
std::vector<StructuralEvent> maybe_annihilate_neurons(Rbm& rbm, WdTracker& tracker,
                                                      std::span<const Vector> batch,
                                                      const RbmTrainConfig& cfg);

struct RbmEpochRecord {
  std::size_t epoch = 0;
  double reconstruction_error = 0.0;
  std::size_t n_hidden = 0;
  double wd_mean = 0.0;
  double wd_max = 0.0;

  friend bool operator==(const RbmEpochRecord&, const RbmEpochRecord&) = default;
};

struct RbmTrainResult {
  std::vector<RbmEpochRecord> epochs;
  std::vector<StructuralEvent> events;
  WdTracker tracker;
};

/// Adaptive training: minibatch CD with WD tracking, a generation check at
/// every epoch end and, once any neuron has been generated, an annihilation
/// check after it.
RbmTrainResult train_rbm(Rbm& rbm, std::span<const Vector> data, const RbmTrainConfig& cfg,
                         SeededRng& rng);

}  // namespace adbn

// SPDX-License-Identifier: Apache-2.0
#include "adbn/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adbn/errors.hpp"

namespace adbn {
namespace {

void require_length(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw InvalidArgument(std::string(what) + ": expected length " + std::to_string(n) +
                          ", got " + std::to_string(v.size()));
  }
}

void require_batch(std::span<const Vector> batch, std::size_t n_visible, const char* what) {
  if (batch.empty()) throw InvalidArgument(std::string(what) + ": empty batch");
  for (const auto& v : batch) require_length(v, n_visible, what);
}

double population_variance(std::deque<double>::const_iterator first,
                           std::deque<double>::const_iterator last) {
  const auto n = static_cast<double>(std::distance(first, last));
  const double mean = std::accumulate(first, last, 0.0) / n;
  double ss = 0.0;
  for (auto it = first; it != last; ++it) ss += (*it - mean) * (*it - mean);
  return ss / n;
}

}  // namespace

Rbm::Rbm(std::size_t n_visible, std::size_t n_hidden)
    : weights_(n_visible, n_hidden), visible_bias_(n_visible, 0.0), hidden_bias_(n_hidden, 0.0) {}

Rbm::Rbm(DenseMatrix weights, Vector visible_bias, Vector hidden_bias)
    : weights_(std::move(weights)),
      visible_bias_(std::move(visible_bias)),
      hidden_bias_(std::move(hidden_bias)) {
  if (!consistent()) throw InvalidArgument("Rbm: inconsistent parameter dimensions");
}

Rbm Rbm::random(std::size_t n_visible, std::size_t n_hidden, double scale, SeededRng& rng) {
  Rbm rbm(n_visible, n_hidden);
  for (auto& w : rbm.weights_.values()) w = rng.normal(0.0, scale);
  return rbm;
}

Vector Rbm::hidden_activations(std::span<const double> v) const {
  require_length(v, n_visible(), "hidden_activations");
  Vector act(hidden_bias_);
  for (std::size_t i = 0; i < n_visible(); ++i) {
    if (v[i] == 0.0) continue;
    const auto row = weights_.row(i);
    for (std::size_t j = 0; j < act.size(); ++j) act[j] += v[i] * row[j];
  }
  for (auto& a : act) a = sigmoid(a);
  return act;
}

Vector Rbm::visible_activations(std::span<const double> h) const {
  require_length(h, n_hidden(), "visible_activations");
  Vector act(n_visible());
  for (std::size_t i = 0; i < act.size(); ++i) {
    act[i] = sigmoid(visible_bias_[i] + dot(weights_.row(i), h));
  }
  return act;
}

double Rbm::energy(std::span<const double> v, std::span<const double> h) const {
  require_length(v, n_visible(), "rbm_energy (visible)");
  require_length(h, n_hidden(), "rbm_energy (hidden)");
  double e = -dot(visible_bias_, v) - dot(hidden_bias_, h);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) e -= v[i] * dot(weights_.row(i), h);
  }
  return e;
}

void Rbm::add_hidden(std::span<const double> incoming, double bias) {
  weights_.append_column(incoming);
  hidden_bias_.push_back(bias);
}

void Rbm::remove_hidden(std::size_t j) {
  if (j >= n_hidden()) throw InvalidArgument("remove_hidden: index out of range");
  weights_.remove_column(j);
  hidden_bias_.erase(hidden_bias_.begin() + static_cast<std::ptrdiff_t>(j));
}

bool Rbm::consistent() const {
  return weights_.rows() == visible_bias_.size() && weights_.cols() == hidden_bias_.size();
}

void RbmTrainConfig::validate(std::size_t initial_hidden) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("learning_rate must be a finite positive number");
  if (cd_steps < 1) throw InvalidArgument("cd_steps must be >= 1");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(gen_threshold > 0.0)) throw InvalidArgument("gen_threshold must be positive");
  if (!(annihilate_threshold > 0.0 && annihilate_threshold < 0.5))
    throw InvalidArgument("annihilate_threshold must lie in (0, 0.5)");
  if (!(inherit_noise >= 0.0) || !std::isfinite(inherit_noise))
    throw InvalidArgument("inherit_noise must be finite and >= 0");
  if (wd_window < 1) throw InvalidArgument("wd_window must be >= 1");
  if (!(init_weight_scale >= 0.0) || !std::isfinite(init_weight_scale))
    throw InvalidArgument("init_weight_scale must be finite and >= 0");
  if (initial_hidden < 1) throw InvalidArgument("initial hidden count must be >= 1");
  if (resolved_max_hidden(initial_hidden) < initial_hidden)
    throw InvalidArgument("max_hidden must be >= the initial hidden count");
}

WdTracker::WdTracker(std::size_t window, std::size_t n_neurons)
    : window_(window), history_(n_neurons) {
  if (window == 0) throw InvalidArgument("WdTracker: window must be >= 1");
}

Vector WdTracker::update(std::span<const double> magnitudes) {
  if (magnitudes.size() != history_.size()) {
    throw InvalidArgument("wd_update: expected " + std::to_string(history_.size()) +
                          " magnitudes, got " + std::to_string(magnitudes.size()));
  }
  for (std::size_t j = 0; j < history_.size(); ++j) {
    auto& h = history_[j];
    h.push_back(magnitudes[j]);
    if (h.size() > 2 * window_) h.pop_front();
  }
  return values();
}

double WdTracker::value(std::size_t j) const {
  const auto& h = history_.at(j);
  if (h.size() < 2 * window_) return 0.0;
  const auto mid = h.begin() + static_cast<std::ptrdiff_t>(window_);
  return std::abs(population_variance(mid, h.end()) - population_variance(h.begin(), mid));
}

Vector WdTracker::values() const {
  Vector out(history_.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = value(j);
  return out;
}

void WdTracker::add_neuron() { history_.emplace_back(); }

void WdTracker::clear(std::size_t j) { history_.at(j).clear(); }

void WdTracker::remove_neuron(std::size_t j) {
  if (j >= history_.size()) throw InvalidArgument("WdTracker: index out of range");
  history_.erase(history_.begin() + static_cast<std::ptrdiff_t>(j));
}

std::string to_string(StructuralEvent::Kind kind) {
  switch (kind) {
    case StructuralEvent::Kind::kGenerated: return "generated";
    case StructuralEvent::Kind::kGenerationCapped: return "generation_capped";
    case StructuralEvent::Kind::kAnnihilated: return "annihilated";
    case StructuralEvent::Kind::kAnnihilationFloor: return "annihilation_floor";
  }
  return "unknown";
}

double rbm_energy(const Rbm& rbm, std::span<const double> v, std::span<const double> h) {
  return rbm.energy(v, h);
}

Vector cd_update(Rbm& rbm, std::span<const Vector> batch, const RbmTrainConfig& cfg,
                 SeededRng& rng) {
  require_batch(batch, rbm.n_visible(), "cd_update");
  if (cfg.cd_steps < 1) throw InvalidArgument("cd_update: cd_steps must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) throw InvalidArgument("cd_update: negative learning rate");
  for (const auto& v : batch) {
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("cd_update: input outside [0,1]");
    }
  }

  const std::size_t nv = rbm.n_visible();
  const std::size_t nh = rbm.n_hidden();
  DenseMatrix grad_w(nv, nh);
  Vector grad_a(nv, 0.0);
  Vector grad_b(nh, 0.0);

  for (const auto& v0 : batch) {
    const Vector h0 = rbm.hidden_activations(v0);
    Vector hk = h0;
    Vector vk;
    for (std::size_t step = 0; step < cfg.cd_steps; ++step) {
      const Vector hs = sample_bernoulli(hk, rng);
      vk = rbm.visible_activations(hs);
      hk = rbm.hidden_activations(vk);
    }
    for (std::size_t i = 0; i < nv; ++i) {
      auto row = grad_w.row(i);
      for (std::size_t j = 0; j < nh; ++j) row[j] += v0[i] * h0[j] - vk[i] * hk[j];
      grad_a[i] += v0[i] - vk[i];
    }
    for (std::size_t j = 0; j < nh; ++j) grad_b[j] += h0[j] - hk[j];
  }

  const double scale = cfg.learning_rate / static_cast<double>(batch.size());
  Vector magnitudes(nh, 0.0);
  for (std::size_t i = 0; i < nv; ++i) {
    auto w = rbm.weights().row(i);
    const auto g = grad_w.row(i);
    for (std::size_t j = 0; j < nh; ++j) {
      const double delta = scale * g[j];
      w[j] += delta;
      magnitudes[j] += delta * delta;
    }
    rbm.visible_bias()[i] += scale * grad_a[i];
  }
  for (std::size_t j = 0; j < nh; ++j) {
    rbm.hidden_bias()[j] += scale * grad_b[j];
    magnitudes[j] = std::sqrt(magnitudes[j]);
  }
  return magnitudes;
}

double reconstruction_error(const Rbm& rbm, std::span<const Vector> batch) {
  require_batch(batch, rbm.n_visible(), "reconstruction_error");
  double total = 0.0;
  for (const auto& v : batch) {
    const Vector recon = rbm.visible_activations(rbm.hidden_activations(v));
    for (std::size_t i = 0; i < v.size(); ++i) total += (v[i] - recon[i]) * (v[i] - recon[i]);
  }
  return total / static_cast<double>(batch.size() * rbm.n_visible());
}

std::vector<StructuralEvent> maybe_generate_neurons(Rbm& rbm, WdTracker& tracker,
                                                    const RbmTrainConfig& cfg,
                                                    std::size_t max_hidden, SeededRng& rng) {
  if (tracker.size() != rbm.n_hidden()) {
    throw InvalidArgument("maybe_generate_neurons: tracker/RBM neuron count mismatch");
  }
  std::vector<StructuralEvent> events;
  const std::size_t n_before = rbm.n_hidden();
  const Vector wd = tracker.values();
  for (std::size_t j = 0; j < n_before; ++j) {
    if (!tracker.full(j) || !(wd[j] > cfg.gen_threshold)) continue;
    if (rbm.n_hidden() >= max_hidden) {
      events.push_back({StructuralEvent::Kind::kGenerationCapped, j, j, wd[j]});
      continue;
    }
    Vector incoming = rbm.weights().column(j);
    for (auto& w : incoming) w += rng.uniform(-cfg.inherit_noise, cfg.inherit_noise);
    const double bias = rbm.hidden_bias()[j] + rng.uniform(-cfg.inherit_noise, cfg.inherit_noise);
    rbm.add_hidden(incoming, bias);
    tracker.add_neuron();
    tracker.clear(j);
    events.push_back({StructuralEvent::Kind::kGenerated, rbm.n_hidden() - 1, j, wd[j]});
  }
  return events;
}

std::vector<StructuralEvent> maybe_annihilate_neurons(Rbm& rbm, WdTracker& tracker,
                                                      std::span<const Vector> batch,
                                                      const RbmTrainConfig& cfg) {
  require_batch(batch, rbm.n_visible(), "maybe_annihilate_neurons");
  if (tracker.size() != rbm.n_hidden()) {
    throw InvalidArgument("maybe_annihilate_neurons: tracker/RBM neuron count mismatch");
  }
  Vector mean(rbm.n_hidden(), 0.0);
  for (const auto& v : batch) {
    const Vector h = rbm.hidden_activations(v);
    for (std::size_t j = 0; j < h.size(); ++j) mean[j] += h[j];
  }
  for (auto& m : mean) m /= static_cast<double>(batch.size());

  std::vector<std::size_t> doomed;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    if (mean[j] < cfg.annihilate_threshold || mean[j] > 1.0 - cfg.annihilate_threshold) {
      doomed.push_back(j);
    }
  }

  std::vector<StructuralEvent> events;
  if (doomed.size() == rbm.n_hidden()) {
    events.push_back({StructuralEvent::Kind::kAnnihilationFloor, doomed.front(), 0,
                      mean[doomed.front()]});
    doomed.erase(doomed.begin());
  }
  // Remove from the back; events keep ascending original indices.
  for (auto it = doomed.rbegin(); it != doomed.rend(); ++it) {
    rbm.remove_hidden(*it);
    tracker.remove_neuron(*it);
  }
  for (std::size_t j : doomed) {
    events.push_back({StructuralEvent::Kind::kAnnihilated, j, 0, mean[j]});
  }
  return events;
}

RbmTrainResult train_rbm(Rbm& rbm, std::span<const Vector> data, const RbmTrainConfig& cfg,
                         SeededRng& rng) {
  require_batch(data, rbm.n_visible(), "train_rbm");
  const std::size_t max_hidden = cfg.resolved_max_hidden(rbm.n_hidden());

  RbmTrainResult result;
  result.tracker = WdTracker(cfg.wd_window, rbm.n_hidden());
  bool generated_any = false;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Vector> batch;
  batch.reserve(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t k = start; k < stop; ++k) batch.push_back(data[order[k]]);
      result.tracker.update(cd_update(rbm, batch, cfg, rng));
    }

    const Vector wd = result.tracker.values();
    RbmEpochRecord record;
    record.epoch = epoch;
    record.wd_mean = std::accumulate(wd.begin(), wd.end(), 0.0) / static_cast<double>(wd.size());
    record.wd_max = *std::max_element(wd.begin(), wd.end());

    // Annihilation starts in the epoch after the first generation event.
    const bool annihilation_armed = generated_any;
    auto gen = maybe_generate_neurons(rbm, result.tracker, cfg, max_hidden, rng);
    for (const auto& e : gen) {
      if (e.kind == StructuralEvent::Kind::kGenerated) generated_any = true;
    }
    std::vector<StructuralEvent> ann;
    if (annihilation_armed) ann = maybe_annihilate_neurons(rbm, result.tracker, data, cfg);
    for (auto* events : {&gen, &ann}) {
      for (auto& e : *events) {
        e.epoch = epoch;
        result.events.push_back(e);
      }
    }
    record.n_hidden = rbm.n_hidden();
    record.reconstruction_error = reconstruction_error(rbm, data);
    result.epochs.push_back(record);
  }
  return result;
}

}  // namespace adbn

// SPDX-License-Identifier: Apache-2.0
#include "adbn/dbn.hpp"

#include <cmath>
#include <numeric>

#include "adbn/errors.hpp"

namespace adbn {

Vector SoftmaxHead::logits(std::span<const double> features) const {
  if (features.size() != n_features()) {
    throw InvalidArgument("softmax head: expected " + std::to_string(n_features()) +
                          " features, got " + std::to_string(features.size()));
  }
  Vector out(bias);
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto row = weights.row(f);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += features[f] * row[c];
  }
  return out;
}

Dbn::Dbn(std::vector<Rbm> layers, SoftmaxHead head, std::vector<std::string> class_labels)
    : layers_(std::move(layers)), head_(std::move(head)), class_labels_(std::move(class_labels)) {
  if (!consistent()) throw InvalidArgument("Dbn: inconsistent layer or head dimensions");
}

void Dbn::append_layer(Rbm layer) {
  if (!layer.consistent()) throw InvalidArgument("append_layer: inconsistent RBM");
  if (!layers_.empty() && layer.n_visible() != layers_.back().n_hidden()) {
    throw InvalidArgument("append_layer: n_visible " + std::to_string(layer.n_visible()) +
                          " does not match top n_hidden " +
                          std::to_string(layers_.back().n_hidden()));
  }
  layers_.push_back(std::move(layer));
  head_ = SoftmaxHead(layers_.back().n_hidden(), class_labels_.size());
}

Rbm& Dbn::top_layer() {
  if (layers_.empty()) throw InvalidArgument("top_layer: no layers");
  return layers_.back();
}

void Dbn::set_head(SoftmaxHead head) {
  if (head.n_features() != feature_size() || head.n_classes() != class_labels_.size() ||
      head.weights.cols() != head.n_classes()) {
    throw InvalidArgument("set_head: head dimensions do not match the stack");
  }
  head_ = std::move(head);
}

Vector Dbn::propagate(std::span<const double> v) const {
  if (layers_.empty()) throw InvalidArgument("propagate: model has no layers");
  Vector x(v.begin(), v.end());
  for (const auto& layer : layers_) x = layer.hidden_activations(x);
  return x;
}

Vector Dbn::predict_proba(std::span<const double> v) const { return head_.predict(propagate(v)); }

std::size_t Dbn::predict_label(std::span<const double> v) const { return argmax(predict_proba(v)); }

bool Dbn::consistent() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!layers_[l].consistent()) return false;
    if (l > 0 && layers_[l].n_visible() != layers_[l - 1].n_hidden()) return false;
  }
  return head_.n_features() == feature_size() && head_.n_classes() == class_labels_.size() &&
         head_.weights.cols() == head_.n_classes();
}

Vector propagate(const Dbn& dbn, std::span<const double> v) { return dbn.propagate(v); }
Vector predict_proba(const Dbn& dbn, std::span<const double> v) { return dbn.predict_proba(v); }
std::size_t predict_label(const Dbn& dbn, std::span<const double> v) {
  return dbn.predict_label(v);
}

void DbnTrainConfig::validate() const {
  rbm.validate(initial_hidden);
  if (!(layer_wd_threshold > 0.0)) throw InvalidArgument("layer_wd_threshold must be positive");
  if (std::isnan(layer_energy_threshold))
    throw InvalidArgument("layer_energy_threshold must be a number");
  if (max_layers < 1) throw InvalidArgument("max_layers must be >= 1");
  if (!(head_learning_rate > 0.0) || !std::isfinite(head_learning_rate))
    throw InvalidArgument("head_learning_rate must be a finite positive number");
}

LayerDecision maybe_generate_layer(Dbn& dbn, double total_wd, double mean_energy,
                                   const DbnTrainConfig& cfg, SeededRng& rng) {
  LayerDecision d;
  d.layer = dbn.layers().empty() ? 0 : dbn.layers().size() - 1;
  d.total_wd = total_wd;
  d.mean_energy = mean_energy;
  const bool criterion = total_wd > cfg.layer_wd_threshold && mean_energy > cfg.layer_energy_threshold;
  if (!criterion) return d;
  if (dbn.layers().size() >= cfg.max_layers) {
    d.capped = true;
    return d;
  }
  d.generate = true;
  dbn.append_layer(
      Rbm::random(dbn.feature_size(), cfg.initial_hidden, cfg.rbm.init_weight_scale, rng));
  return d;
}

double mean_energy(const Rbm& rbm, std::span<const Vector> data, SeededRng& rng) {
  if (data.empty()) throw InvalidArgument("mean_energy: empty data");
  double total = 0.0;
  for (const auto& v : data) {
    const Vector h = sample_bernoulli(rbm.hidden_activations(v), rng);
    total += rbm.energy(v, h);
  }
  return total / static_cast<double>(data.size());
}

std::vector<double> train_head(SoftmaxHead& head, std::span<const Vector> features,
                               std::span<const std::size_t> labels, double learning_rate,
                               std::size_t epochs) {
  if (features.empty() || features.size() != labels.size()) {
    throw InvalidArgument("train_head: features and labels must be non-empty and equal length");
  }
  const std::size_t n_features = head.n_features();
  const std::size_t n_classes = head.n_classes();
  for (std::size_t s = 0; s < features.size(); ++s) {
    if (features[s].size() != n_features) throw InvalidArgument("train_head: feature width mismatch");
    if (labels[s] >= n_classes) throw InvalidArgument("train_head: label out of range");
  }
  const double inv_n = 1.0 / static_cast<double>(features.size());

  // Descent on standardized features z = (f - mean) / scale; the affine map is
  // folded back into `head` at the end.
  Vector mean(n_features, 0.0);
  Vector scale(n_features, 0.0);
  for (const auto& f : features) {
    for (std::size_t k = 0; k < n_features; ++k) mean[k] += f[k] * inv_n;
  }
  for (const auto& f : features) {
    for (std::size_t k = 0; k < n_features; ++k) scale[k] += (f[k] - mean[k]) * (f[k] - mean[k]) * inv_n;
  }
  for (auto& sd : scale) sd = std::sqrt(sd);
  std::vector<Vector> z(features.size(), Vector(n_features, 0.0));
  for (std::size_t s = 0; s < features.size(); ++s) {
    for (std::size_t k = 0; k < n_features; ++k) {
      z[s][k] = scale[k] > 1e-12 ? (features[s][k] - mean[k]) / scale[k] : 0.0;
    }
  }

  SoftmaxHead work(n_features, n_classes);
  std::vector<double> losses;
  losses.reserve(epochs + 1);
  DenseMatrix grad_w(n_features, n_classes);
  Vector grad_b(n_classes);
  for (std::size_t epoch = 0;; ++epoch) {
    std::fill(grad_w.values().begin(), grad_w.values().end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    double loss = 0.0;
    for (std::size_t s = 0; s < z.size(); ++s) {
      Vector p = work.predict(z[s]);
      loss -= std::log(std::max(p[labels[s]], 1e-300));
      p[labels[s]] -= 1.0;
      for (std::size_t f = 0; f < n_features; ++f) {
        if (z[s][f] == 0.0) continue;
        auto row = grad_w.row(f);
        for (std::size_t c = 0; c < n_classes; ++c) row[c] += z[s][f] * p[c];
      }
      for (std::size_t c = 0; c < n_classes; ++c) grad_b[c] += p[c];
    }
    losses.push_back(loss * inv_n);
    if (epoch == epochs) break;
    const double step = learning_rate * inv_n;
    auto w = work.weights.values();
    const auto g = grad_w.values();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * g[k];
    for (std::size_t c = 0; c < n_classes; ++c) work.bias[c] -= step * grad_b[c];
  }

  head = SoftmaxHead(n_features, n_classes);
  head.bias = work.bias;
  for (std::size_t k = 0; k < n_features; ++k) {
    if (!(scale[k] > 1e-12)) continue;
    for (std::size_t c = 0; c < n_classes; ++c) {
      head.weights(k, c) = work.weights(k, c) / scale[k];
      head.bias[c] -= head.weights(k, c) * mean[k];
    }
  }
  return losses;
}

DbnTrainResult train_dbn(const LabeledDataset& data, const DbnTrainConfig& cfg, SeededRng& rng) {
  if (data.empty()) throw InvalidArgument("train_dbn: empty dataset");
  data.validate();
  cfg.validate();

  DbnTrainResult result;
  result.model = Dbn({}, SoftmaxHead(0, data.class_labels.size()), data.class_labels);
  Dbn& model = result.model;
  TrainLog& log = result.log;

  std::vector<Vector> layer_input = data.inputs();
  model.append_layer(
      Rbm::random(data.input_size(), cfg.initial_hidden, cfg.rbm.init_weight_scale, rng));

  for (;;) {
    const std::size_t layer = model.layers().size() - 1;
    Rbm& rbm = model.top_layer();
    RbmTrainResult trained = train_rbm(rbm, layer_input, cfg.rbm, rng);
    for (const auto& r : trained.epochs) log.epochs.push_back({layer, r});
    for (auto e : trained.events) {
      e.layer = layer;
      log.events.push_back(e);
    }

    const Vector wd = trained.tracker.values();
    const double total_wd = std::accumulate(wd.begin(), wd.end(), 0.0);
    const double energy = mean_energy(rbm, layer_input, rng);

    // Freeze this layer and feed its activations upward.
    std::vector<Vector> next_input;
    next_input.reserve(layer_input.size());
    for (const auto& v : layer_input) next_input.push_back(rbm.hidden_activations(v));

    const LayerDecision decision = maybe_generate_layer(model, total_wd, energy, cfg, rng);
    log.layer_decisions.push_back(decision);
    layer_input = std::move(next_input);
    if (!decision.generate) break;
  }

  SoftmaxHead head(model.feature_size(), data.class_labels.size());
  const auto labels = data.labels();
  log.head_loss = train_head(head, layer_input, labels, cfg.head_learning_rate, cfg.head_epochs);
  model.set_head(std::move(head));
  return result;
}

}  // namespace adbn

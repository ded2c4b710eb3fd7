// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "adbn/dbn.hpp"
#include "adbn/metrics.hpp"
#include "adbn/numerics.hpp"
#include "adbn/rbm.hpp"

namespace adbn::testing {

inline std::vector<double> bits(std::uint64_t code, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>((code >> i) & 1U);
  return out;
}

// Energy written out term by term, independent of Rbm::energy.
inline double raw_energy(const Rbm& rbm, const std::vector<double>& v, const std::vector<double>& h) {
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) e -= rbm.visible_bias()[i] * v[i];
  for (std::size_t j = 0; j < h.size(); ++j) e -= rbm.hidden_bias()[j] * h[j];
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) e -= v[i] * rbm.weights()(i, j) * h[j];
  return e;
}

// log sum_h exp(-E(v,h)) by enumerating all hidden states.
inline double log_unnormalized(const Rbm& rbm, const std::vector<double>& v) {
  const std::size_t nh = rbm.n_hidden();
  std::vector<double> terms;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << nh); ++c) terms.push_back(-raw_energy(rbm, v, bits(c, nh)));
  const double m = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

// P(v) for every binary visible state, indexed by the bit code of v.
inline std::vector<double> exact_visible_distribution(const Rbm& rbm) {
  const std::size_t nv = rbm.n_visible();
  std::vector<double> logs;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << nv); ++c) logs.push_back(log_unnormalized(rbm, bits(c, nv)));
  const double m = *std::max_element(logs.begin(), logs.end());
  double z = 0.0;
  for (double l : logs) z += std::exp(l - m);
  std::vector<double> p;
  for (double l : logs) p.push_back(std::exp(l - m) / z);
  return p;
}

inline double brute_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    s += p[i] * std::log(p[i] / std::max(q[i], 1e-12));
  }
  return s < 0.0 ? 0.0 : s;
}

inline std::size_t first_max(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::vector<double> random_distribution(std::size_t k, SeededRng& rng) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& x : p) s += (x = rng.uniform() + 1e-3);
  for (auto& x : p) x /= s;
  return p;
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

inline void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                      std::uint32_t rows, std::uint32_t cols, const std::vector<std::uint8_t>& pixels,
                      const std::vector<std::uint8_t>& label_bytes) {
  std::ofstream im(images, std::ios::binary);
  write_be32(im, 0x00000803);
  write_be32(im, static_cast<std::uint32_t>(label_bytes.size()));
  write_be32(im, rows);
  write_be32(im, cols);
  im.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  std::ofstream lb(labels, std::ios::binary);
  write_be32(lb, 0x00000801);
  write_be32(lb, static_cast<std::uint32_t>(label_bytes.size()));
  lb.write(reinterpret_cast<const char*>(label_bytes.data()), static_cast<std::streamsize>(label_bytes.size()));
}

// Published eight-class emotion confusion matrix, rows true, columns predicted.
inline const std::vector<std::string>& emotion_labels() {
  static const std::vector<std::string> labels = {"Neutral", "Happy", "Sad",     "Surprise",
                                                  "Fear",    "Disgust", "Anger", "Contempt"};
  return labels;
}

inline ConfusionMatrix published_confusion() {
  return ConfusionMatrix(emotion_labels(), {{439, 2, 7, 5, 8, 16, 4, 19},
                                            {7, 462, 2, 0, 4, 12, 1, 12},
                                            {12, 3, 421, 13, 11, 20, 5, 15},
                                            {15, 4, 10, 429, 11, 22, 0, 9},
                                            {10, 2, 10, 10, 452, 8, 3, 5},
                                            {8, 2, 3, 5, 8, 462, 5, 7},
                                            {14, 4, 8, 10, 9, 47, 392, 16},
                                            {17, 8, 6, 3, 2, 21, 5, 438}});
}

// Published per-class F1 for the same matrix.
inline const std::vector<double>& published_f1() {
  static const std::vector<double> f1 = {0.85, 0.93, 0.87, 0.88, 0.90, 0.83, 0.85, 0.85};
  return f1;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adbn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace adbn::testing

// SPDX-License-Identifier: Apache-2.0
#include "adbn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "adbn/errors.hpp"

namespace adbn {

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("uniform_index: n must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double SeededRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::derive(std::uint64_t stream) const {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return SeededRng(z ^ (z >> 31));
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("DenseMatrix: expected " + std::to_string(rows_ * cols_) +
                          " values, got " + std::to_string(values_.size()));
  }
}

Vector DenseMatrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void DenseMatrix::append_column(std::span<const double> column) {
  if (column.size() != rows_) throw InvalidArgument("append_column: length mismatch");
  std::vector<double> next(rows_ * (cols_ + 1));
  for (std::size_t r = 0; r < rows_; ++r) {
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(r * cols_), cols_,
                next.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)));
    next[r * (cols_ + 1) + cols_] = column[r];
  }
  values_ = std::move(next);
  ++cols_;
}

void DenseMatrix::remove_column(std::size_t c) {
  if (c >= cols_) throw InvalidArgument("remove_column: index out of range");
  std::vector<double> next;
  next.reserve(rows_ * (cols_ - 1));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = 0; k < cols_; ++k) {
      if (k != c) next.push_back((*this)(r, k));
    }
  }
  values_ = std::move(next);
  --cols_;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArgument("softmax: empty input");
  const double top = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

Vector sample_bernoulli(std::span<const double> probabilities, SeededRng& rng) {
  Vector out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("sample_bernoulli: probability " + std::to_string(p) +
                            " at index " + std::to_string(i) + " outside [0,1]");
    }
    out[i] = rng.uniform() < p ? 1.0 : 0.0;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace adbn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace adbn {

/// Contract violation by the caller: dimension mismatch, empty input,
/// out-of-domain argument.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (files, datasets, model files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parent model that leaves either the correct or the wrong partition
/// empty, so no child can be trained on it.
class DegeneratePartition : public std::runtime_error {
 public:
  DegeneratePartition(const std::string& what, std::size_t n_correct, std::size_t n_wrong)
      : std::runtime_error(what), n_correct_(n_correct), n_wrong_(n_wrong) {}

  std::size_t n_correct() const noexcept { return n_correct_; }
  std::size_t n_wrong() const noexcept { return n_wrong_; }

 private:
  std::size_t n_correct_;
  std::size_t n_wrong_;
};

}  // namespace adbn

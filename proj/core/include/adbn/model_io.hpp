// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "adbn/dbn.hpp"

namespace adbn {

inline constexpr int kModelFormatVersion = 1;

/// JSON container: {format, version, class_labels, layers[], head}. Each layer
/// is {n_visible, n_hidden, weights (row-major), visible_bias, hidden_bias}.
/// Doubles are written in shortest round-trip form, so save/load is exact.
std::string model_to_string(const Dbn& dbn);
Dbn model_from_string(const std::string& text);

void save_model(const Dbn& dbn, const std::filesystem::path& path);
/// Throws DataError for unreadable, malformed, or inconsistent files.
Dbn load_model(const std::filesystem::path& path);

}  // namespace adbn

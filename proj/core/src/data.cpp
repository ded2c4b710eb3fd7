// SPDX-License-Identifier: Apache-2.0
#include "adbn/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "adbn/errors.hpp"

namespace adbn {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t\r");
    const auto last = f.find_last_not_of(" \t\r");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line,
                    const std::string& column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": column '" + column +
                    "': not a finite number: '" + text + "'");
  }
  return value;
}

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw DataError(path.string() + ": truncated IDX header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

std::vector<Vector> LabeledDataset::inputs() const {
  std::vector<Vector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.input);
  return out;
}

std::vector<std::size_t> LabeledDataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::uint64_t> ids) const {
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < samples.size(); ++i) index.emplace(samples[i].id, i);
  LabeledDataset out;
  out.class_labels = class_labels;
  out.feature_min = feature_min;
  out.feature_max = feature_max;
  out.samples.reserve(ids.size());
  for (auto id : ids) {
    const auto it = index.find(id);
    if (it == index.end()) throw InvalidArgument("subset: unknown sample id " + std::to_string(id));
    out.samples.push_back(samples[it->second]);
  }
  return out;
}

void LabeledDataset::validate() const {
  if (class_labels.empty()) throw DataError("dataset has no class labels");
  const std::size_t width = input_size();
  std::set<std::uint64_t> ids;
  for (const auto& s : samples) {
    const std::string where = "sample " + std::to_string(s.id) + ": ";
    if (s.input.size() != width) throw DataError(where + "inconsistent input length");
    if (s.label >= class_labels.size()) throw DataError(where + "label index out of range");
    for (double x : s.input) {
      if (!(x >= 0.0 && x <= 1.0)) throw DataError(where + "input component outside [0,1]");
    }
    for (const auto& va : {s.valence, s.arousal}) {
      if (va && !(*va >= -1.0 && *va <= 1.0)) {
        throw DataError(where + "valence/arousal outside [-1,1]");
      }
    }
    if (!ids.insert(s.id).second) throw DataError(where + "duplicate id");
  }
}

void normalize_features(LabeledDataset& ds) {
  const std::size_t width = ds.input_size();
  ds.feature_min.assign(width, std::numeric_limits<double>::infinity());
  ds.feature_max.assign(width, -std::numeric_limits<double>::infinity());
  for (const auto& s : ds.samples) {
    for (std::size_t k = 0; k < width; ++k) {
      ds.feature_min[k] = std::min(ds.feature_min[k], s.input[k]);
      ds.feature_max[k] = std::max(ds.feature_max[k], s.input[k]);
    }
  }
  for (auto& s : ds.samples) {
    for (std::size_t k = 0; k < width; ++k) {
      const double range = ds.feature_max[k] - ds.feature_min[k];
      s.input[k] = range > 0.0 ? (s.input[k] - ds.feature_min[k]) / range : 0.0;
    }
  }
}

LabeledDataset align_labels(const LabeledDataset& ds, const std::vector<std::string>& target) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < target.size(); ++i) position.emplace(target[i], i);
  std::vector<std::size_t> remap(ds.class_labels.size());
  for (std::size_t i = 0; i < ds.class_labels.size(); ++i) {
    const auto it = position.find(ds.class_labels[i]);
    if (it == position.end()) {
      throw InvalidArgument("class-set mismatch: label '" + ds.class_labels[i] +
                            "' is not known to the model");
    }
    remap[i] = it->second;
  }
  LabeledDataset out = ds;
  out.class_labels = target;
  for (auto& s : out.samples) s.label = remap[s.label];
  return out;
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw DataError(path.string() + ": no samples");
  if (header.front() != "label") {
    throw DataError(path.string() + ":" + std::to_string(line_no) +
                    ": header must start with 'label'");
  }
  std::size_t first_feature = 1;
  const bool has_valence = header.size() > first_feature && header[first_feature] == "valence";
  if (has_valence) ++first_feature;
  const bool has_arousal = header.size() > first_feature && header[first_feature] == "arousal";
  if (has_arousal) ++first_feature;
  if (first_feature == header.size()) {
    throw DataError(path.string() + ": header declares no feature columns");
  }

  struct RawRow {
    std::string label;
    LabeledSample sample;
  };
  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != header.size()) {
      throw DataError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw DataError(where + "empty label");
    RawRow row;
    row.label = fields[0];
    std::size_t col = 1;
    for (auto [present, slot] : {std::pair{has_valence, &row.sample.valence},
                                 std::pair{has_arousal, &row.sample.arousal}}) {
      if (!present) continue;
      if (!fields[col].empty()) {
        const double v = parse_number(fields[col], path, line_no, header[col]);
        if (v < -1.0 || v > 1.0) {
          throw DataError(where + header[col] + " " + fields[col] + " outside [-1,1]");
        }
        *slot = v;
      }
      ++col;
    }
    for (; col < fields.size(); ++col) {
      row.sample.input.push_back(parse_number(fields[col], path, line_no, header[col]));
    }
    row.sample.id = rows.size();
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no samples");

  LabeledDataset ds;
  ds.class_labels = schema.class_labels;
  if (ds.class_labels.empty()) {
    std::set<std::string> seen;
    for (const auto& r : rows) seen.insert(r.label);
    ds.class_labels.assign(seen.begin(), seen.end());
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.class_labels.size(); ++i) index.emplace(ds.class_labels[i], i);

  ds.samples.reserve(rows.size());
  for (auto& r : rows) {
    const auto it = index.find(r.label);
    if (it == index.end()) {
      throw DataError(path.string() + ": data row " + std::to_string(r.sample.id + 1) +
                      ": unknown label '" + r.label + "'");
    }
    r.sample.label = it->second;
    ds.samples.push_back(std::move(r.sample));
  }
  if (schema.normalize) normalize_features(ds);
  ds.validate();
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  const bool has_valence = std::any_of(ds.samples.begin(), ds.samples.end(),
                                       [](const auto& s) { return s.valence.has_value(); });
  const bool has_arousal = std::any_of(ds.samples.begin(), ds.samples.end(),
                                       [](const auto& s) { return s.arousal.has_value(); });
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "label";
  if (has_valence) out << ",valence";
  if (has_arousal) out << ",arousal";
  for (std::size_t k = 0; k < ds.input_size(); ++k) out << ",f" << k;
  out << '\n';
  for (const auto& s : ds.samples) {
    out << ds.class_labels.at(s.label);
    if (has_valence) {
      out << ',';
      if (s.valence) out << *s.valence;
    }
    if (has_arousal) {
      out << ',';
      if (s.arousal) out << *s.arousal;
    }
    for (double x : s.input) out << ',' << x;
    out << '\n';
  }
  if (!out) throw DataError(path.string() + ": write failed");
}

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw DataError(images.string() + ": cannot open file");
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw DataError(labels.string() + ": cannot open file");

  const std::uint32_t img_magic = read_be32(img, images);
  if (img_magic != 0x00000803) {
    throw DataError(images.string() + ": bad image magic " + hex(img_magic) + ", expected 0x00000803");
  }
  const std::uint32_t lab_magic = read_be32(lab, labels);
  if (lab_magic != 0x00000801) {
    throw DataError(labels.string() + ": bad label magic " + hex(lab_magic) + ", expected 0x00000801");
  }
  const std::uint32_t n_images = read_be32(img, images);
  const std::uint32_t n_rows = read_be32(img, images);
  const std::uint32_t n_cols = read_be32(img, images);
  const std::uint32_t n_labels = read_be32(lab, labels);
  if (n_images != n_labels) {
    throw DataError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                    std::to_string(n_labels) + " labels");
  }
  if (n_images == 0) throw DataError(images.string() + ": no samples");

  const std::size_t pixels = std::size_t{n_rows} * n_cols;
  std::vector<unsigned char> label_bytes(n_labels);
  if (!lab.read(reinterpret_cast<char*>(label_bytes.data()), n_labels)) {
    throw DataError(labels.string() + ": truncated label data");
  }

  LabeledDataset ds;
  ds.samples.reserve(n_images);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
      throw DataError(images.string() + ": truncated image data at image " + std::to_string(i));
    }
    LabeledSample s;
    s.id = i;
    s.label = label_bytes[i];
    s.input.resize(pixels);
    for (std::size_t k = 0; k < pixels; ++k) s.input[k] = buf[k] / 255.0;
    ds.samples.push_back(std::move(s));
  }
  const auto max_label = *std::max_element(label_bytes.begin(), label_bytes.end());
  for (unsigned c = 0; c <= max_label; ++c) ds.class_labels.push_back(std::to_string(c));
  ds.validate();
  return ds;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double train_fraction,
                                                SeededRng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: fraction must lie in (0,1)");
  }
  std::vector<std::vector<std::size_t>> by_class(ds.class_labels.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) by_class.at(ds.samples[i].label).push_back(i);

  std::vector<bool> to_train(ds.samples.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2) {
      throw DataError("split: class '" + ds.class_labels[c] + "' has fewer than 2 samples");
    }
    rng.shuffle(members);
    const auto n = static_cast<double>(members.size());
    auto k = static_cast<std::size_t>(std::llround(train_fraction * n));
    k = std::clamp<std::size_t>(k, 1, members.size() - 1);
    for (std::size_t m = 0; m < k; ++m) to_train[members[m]] = true;
  }

  LabeledDataset train, test;
  for (auto* part : {&train, &test}) {
    part->class_labels = ds.class_labels;
    part->feature_min = ds.feature_min;
    part->feature_max = ds.feature_max;
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    (to_train[i] ? train : test).samples.push_back(ds.samples[i]);
  }
  return {std::move(train), std::move(test)};
}

LabeledDataset make_overlap_fixture(std::size_t n_per_class, double overlap, SeededRng& rng) {
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw InvalidArgument("make_overlap_fixture: overlap must lie in [0,1]");
  }
  if (n_per_class == 0) throw InvalidArgument("make_overlap_fixture: n_per_class must be >= 1");
  const double offset = 8.0 * (1.0 - overlap) / 2.0 / std::sqrt(2.0);

  LabeledDataset ds;
  ds.class_labels = {"anger", "disgust"};
  ds.samples.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      const double center = c == 0 ? -offset : offset;
      LabeledSample s;
      s.id = ds.samples.size();
      s.label = c;
      s.input = {rng.normal(center, 1.0), rng.normal(center, 1.0)};
      ds.samples.push_back(std::move(s));
    }
  }
  normalize_features(ds);
  for (auto& s : ds.samples) {
    s.valence = 2.0 * s.input[0] - 1.0;
    s.arousal = 2.0 * s.input[1] - 1.0;
  }
  ds.validate();
  return ds;
}

}  // namespace adbn

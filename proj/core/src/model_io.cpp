// SPDX-License-Identifier: Apache-2.0
#include "adbn/model_io.hpp"

#include <fstream>
#include <sstream>

#include "adbn/errors.hpp"
#include "json.hpp"

namespace adbn {
namespace {

using nlohmann::json;

json rbm_to_json(const Rbm& rbm) {
  const auto w = rbm.weights().values();
  return {{"n_visible", rbm.n_visible()},
          {"n_hidden", rbm.n_hidden()},
          {"weights", std::vector<double>(w.begin(), w.end())},
          {"visible_bias", rbm.visible_bias()},
          {"hidden_bias", rbm.hidden_bias()}};
}

Rbm rbm_from_json(const json& j) {
  const auto nv = j.at("n_visible").get<std::size_t>();
  const auto nh = j.at("n_hidden").get<std::size_t>();
  return Rbm(DenseMatrix(nv, nh, j.at("weights").get<std::vector<double>>()),
             j.at("visible_bias").get<Vector>(), j.at("hidden_bias").get<Vector>());
}

}  // namespace

std::string model_to_string(const Dbn& dbn) {
  json layers = json::array();
  for (const auto& l : dbn.layers()) layers.push_back(rbm_to_json(l));
  const auto hw = dbn.head().weights.values();
  json doc = {{"format", "adbn-model"},
              {"version", kModelFormatVersion},
              {"class_labels", dbn.class_labels()},
              {"layers", std::move(layers)},
              {"head",
               {{"n_features", dbn.head().n_features()},
                {"n_classes", dbn.head().n_classes()},
                {"weights", std::vector<double>(hw.begin(), hw.end())},
                {"bias", dbn.head().bias}}}};
  return doc.dump(1) + "\n";
}

Dbn model_from_string(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "adbn-model") {
      throw DataError("model file: unexpected format tag");
    }
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw DataError("model file: unsupported version " + doc.at("version").dump());
    }
    std::vector<Rbm> layers;
    for (const auto& l : doc.at("layers")) layers.push_back(rbm_from_json(l));
    const json& h = doc.at("head");
    SoftmaxHead head;
    head.weights = DenseMatrix(h.at("n_features").get<std::size_t>(),
                               h.at("n_classes").get<std::size_t>(),
                               h.at("weights").get<std::vector<double>>());
    head.bias = h.at("bias").get<Vector>();
    return Dbn(std::move(layers), std::move(head),
               doc.at("class_labels").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const Dbn& dbn, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << model_to_string(dbn);
  if (!out) throw DataError(path.string() + ": write failed");
}

Dbn load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open model file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_string(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace adbn

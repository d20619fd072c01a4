// Copyright 2026  The upcall-mmdl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "upcall/nn/model_io.h"

#include "upcall/io.h"

namespace upcall::nn {

namespace fs = std::filesystem;

void save_network(const Network& net, const fs::path& dir, const nlohmann::json& extra) {
  net.validate();
  fs::create_directories(dir);
  nlohmann::json layers = nlohmann::json::array();
  for (size_t i = 0; i < net.num_layers(); ++i) {
    const Layer& l = net.layer(i);
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : l.params()) {
      std::string file = std::to_string(i) + "_" + p.name + ".f64";
      write_f64_file(dir / file, p.value.data);
      params.push_back({{"name", p.name}, {"shape", p.value.shape}, {"file", file}});
    }
    layers.push_back(
        {{"kind", std::string(layer_kind_name(l.kind()))}, {"config", l.config()}, {"params", params}});
  }
  nlohmann::json meta = {{"format_version", kModelFormatVersion},
                         {"input_shape", net.input_shape()},
                         {"n_classes", net.n_classes()},
                         {"layers", layers},
                         {"extra", extra}};
  write_json_file(dir / "model.json", meta);
}

Network load_network(const fs::path& dir, nlohmann::json* extra) {
  if (!fs::is_directory(dir)) throw RuntimeFailure("model directory not found: " + dir.string());
  nlohmann::json meta = read_json_file(dir / "model.json");
  try {
    if (meta.at("format_version").get<int>() != kModelFormatVersion)
      throw RuntimeFailure(dir.string() + ": unsupported model format version");
    Network net(meta.at("input_shape").get<Shape>(), meta.at("n_classes").get<int>());
    for (const auto& jl : meta.at("layers")) {
      auto layer = make_layer(parse_layer_kind(jl.at("kind").get<std::string>()), jl.at("config"));
      auto& params = layer->params();
      const auto& jp = jl.at("params");
      if (jp.size() != params.size()) throw RuntimeFailure(dir.string() + ": parameter count mismatch");
      for (size_t j = 0; j < params.size(); ++j) {
        if (jp[j].at("name").get<std::string>() != params[j].name ||
            jp[j].at("shape").get<Shape>() != params[j].value.shape)
          throw RuntimeFailure(dir.string() + ": parameter " + params[j].name + " mismatch");
        auto values = read_f64_file(dir / jp[j].at("file").get<std::string>());
        if (values.size() != params[j].value.size())
          throw RuntimeFailure(dir.string() + ": blob size mismatch for " + params[j].name);
        params[j].value.data = std::move(values);
      }
      net.add(std::move(layer));
    }
    net.validate();
    if (extra) *extra = meta.value("extra", nlohmann::json::object());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(dir.string() + ": malformed model metadata: " + e.what());
  } catch (const ValidationError& e) {
    throw RuntimeFailure(dir.string() + ": inconsistent model: " + e.what());
  }
}

}  // namespace upcall::nn

// Copyright 2026 The Gridcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gridcast/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "gridcast/error.hpp"
#include "gridcast/gtf.hpp"

namespace gridcast {

using nlohmann::json;

namespace {

json spec_json(const NetworkSpec& spec) {
  json j;
  j["num_blocks"] = spec.num_blocks;
  j["bottleneck"] = spec.bottleneck;
  j["dropout_rate"] = spec.dropout_rate;
  j["l2_coeff"] = spec.l2_coeff;
  j["output_units"] = spec.output_units;
  j["hidden_units"] = spec.hidden_units;
  j["input"] = {{"fortnights", spec.input.fortnights},
                {"lat", spec.input.lat},
                {"lon", spec.input.lon},
                {"channels", spec.input.channels}};
  j["bn_momentum"] = spec.bn_momentum;
  j["bn_eps"] = spec.bn_eps;
  j["relu_before_add"] = spec.relu_before_add;
  return j;
}

NetworkSpec spec_from(const json& j) {
  NetworkSpec spec;
  spec.num_blocks = j.at("num_blocks").get<std::int64_t>();
  spec.bottleneck = j.at("bottleneck").get<std::int64_t>();
  spec.dropout_rate = j.at("dropout_rate").get<double>();
  spec.l2_coeff = j.at("l2_coeff").get<double>();
  spec.output_units = j.at("output_units").get<std::int64_t>();
  spec.hidden_units = j.value("hidden_units", std::int64_t{512});
  spec.input.fortnights = j.at("input").at("fortnights").get<std::int64_t>();
  spec.input.lat = j.at("input").at("lat").get<std::int64_t>();
  spec.input.lon = j.at("input").at("lon").get<std::int64_t>();
  spec.input.channels = j.at("input").at("channels").get<std::int64_t>();
  spec.bn_momentum = j.value("bn_momentum", 0.9);
  spec.bn_eps = j.value("bn_eps", 1e-5);
  spec.relu_before_add = j.value("relu_before_add", false);
  spec.validate();
  return spec;
}

std::string tensor_file_name(const std::string& param_name) {
  std::string s = param_name;
  std::replace(s.begin(), s.end(), '/', '_');
  return s + ".gtf";
}

}  // namespace

std::string network_spec_to_json(const NetworkSpec& spec) { return spec_json(spec).dump(2); }

NetworkSpec network_spec_from_json(const std::string& text) {
  try {
    return spec_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad network spec JSON: ") + e.what());
  }
}

void save_checkpoint(const NetworkSpec& spec, NetworkState<float>& state,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "tensors");
  json manifest;
  manifest["spec"] = spec_json(spec);
  manifest["init_seed"] = state.init_seed;
  manifest["step_count"] = state.step_count;
  json tensors = json::array();
  for (auto& [name, t] : all_tensors(state)) {
    const std::string file = tensor_file_name(name);
    encode_gtf(t, dir / "tensors" / file);
    tensors.push_back({{"name", name}, {"dims", t.dims()}, {"file", file}});
  }
  manifest["tensors"] = tensors;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot create checkpoint manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no checkpoint manifest at " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("bad checkpoint manifest: " + std::string(e.what()));
  }
  LoadedCheckpoint loaded;
  loaded.spec = spec_from(manifest.at("spec"));
  loaded.state = init_params<float>(loaded.spec, manifest.at("init_seed").get<std::uint64_t>());
  loaded.state.step_count = manifest.at("step_count").get<std::int64_t>();

  auto tensors = all_tensors(loaded.state);
  const json& index = manifest.at("tensors");
  if (index.size() != tensors.size())
    throw DataError("checkpoint lists " + std::to_string(index.size()) + " tensors, spec needs " +
                    std::to_string(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& [name, t] = tensors[i];
    const json& entry = index[i];
    if (entry.at("name").get<std::string>() != name)
      throw DataError("checkpoint tensor order mismatch at '" + name + "'");
    Tensor<float> disk = decode_gtf(dir / "tensors" / entry.at("file").get<std::string>());
    if (disk.dims() != t.dims())
      throw ShapeError("checkpoint tensor '" + name + "' has shape " + shape_str(disk.dims()) +
                       ", spec expects " + shape_str(t.dims()));
    std::copy_n(disk.data(), disk.size(), t.data());
  }
  return loaded;
}

}  // namespace gridcast

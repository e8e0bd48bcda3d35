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

#include "gridcast/runmeta.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "gridcast/error.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

using nlohmann::json;

std::uint64_t file_checksum_fnv1a(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for checksumming");
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

void write_run_record(const std::filesystem::path& dir, const std::string& command,
                      const std::string& resolved_config_json,
                      const std::vector<std::filesystem::path>& inputs,
                      const std::vector<std::string>& outputs) {
  std::filesystem::create_directories(dir);
  json j;
  j["command"] = command;
  try {
    j["config"] = json::parse(resolved_config_json);
  } catch (const json::exception& e) {
    throw ConfigError("run record config is not valid JSON: " + std::string(e.what()));
  }
  json ins = json::array();
  for (const auto& p : inputs) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(file_checksum_fnv1a(p)));
    ins.push_back({{"path", p.string()}, {"checksum_fnv1a64", hex}});
  }
  j["inputs"] = ins;
  j["outputs"] = outputs;
  std::ofstream out(dir / "run.json");
  if (!out) throw DataError("cannot create " + (dir / "run.json").string());
  out << j.dump(2) << "\n";
}

}  // namespace gridcast

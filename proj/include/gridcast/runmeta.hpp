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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gridcast {

// FNV-1a over the file's bytes.
std::uint64_t file_checksum_fnv1a(const std::filesystem::path& path);

// Writes run.json into `dir`: the invoked command, its fully resolved
// configuration (a JSON object, pre-serialized), input checksums, and the
// produced outputs. A run is replayable from this record alone.
void write_run_record(const std::filesystem::path& dir, const std::string& command,
                      const std::string& resolved_config_json,
                      const std::vector<std::filesystem::path>& inputs,
                      const std::vector<std::string>& outputs);

}  // namespace gridcast

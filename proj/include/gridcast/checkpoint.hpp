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

#include <filesystem>
#include <string>

#include "gridcast/network.hpp"

namespace gridcast {

// Checkpoint directory layout:
//   manifest.json          spec, init seed, step count, tensor index
//   tensors/<name>.gtf     one GTF file per parameter or buffer
// Names use '_' for the '/' separators in parameter names.

std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const std::string& text);

void save_checkpoint(const NetworkSpec& spec, NetworkState<float>& state,
                     const std::filesystem::path& dir);

struct LoadedCheckpoint {
  NetworkSpec spec;
  NetworkState<float> state;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace gridcast

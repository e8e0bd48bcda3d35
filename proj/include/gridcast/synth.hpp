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
#include <map>
#include <string>
#include <vector>

#include "gridcast/grid.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

struct SignalBox {
  std::int64_t row = 0;
  std::int64_t col = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
};

// Synthetic climate world: smooth random predictor fields with one planted
// linear teleconnection. The target at valid cell j is
//   b_j + c_j * standardized(regional signal) + noise,  sigma_j = c_j / snr.
// snr <= 0 disables the noise. Everything is a pure function of the seed.
struct SyntheticWorldSpec {
  std::int64_t years = 32;
  std::int64_t first_year = 1940;
  std::int64_t lat = 30;
  std::int64_t lon = 45;
  std::int64_t channels = 6;
  bool daily = false;  // also emit raw daily fields (days, lat, lon, C)
  // raw grids expect the 3x3 spatial downsampling; network grids are already
  // at model resolution and skip it.
  bool network_resolution = false;
  std::int64_t target_lat = 33;
  std::int64_t target_lon = 35;
  double valid_density = 0.309;
  std::int64_t signal_channel = 0;
  SignalBox signal_box;                       // zero box -> centered default
  std::vector<std::int64_t> signal_fortnights = {4, 5, 6};
  double snr = 5.0;
  std::int64_t sst_channel = -1;  // -1: channel 20 when C == 25, else last
  std::uint64_t seed = 0;
  std::vector<std::string> target_names = {"jjas"};

  std::int64_t resolved_sst_channel() const {
    if (sst_channel >= 0) return sst_channel;
    return channels == kCanonicalChannels ? kCanonicalSstChannel : channels - 1;
  }
};

struct SyntheticTarget {
  std::string name;
  // Linear law w.r.t. the raw regional-mean signal s_y:
  //   target_j(y) = slope[j] * s_y + intercept[j] + noise
  std::vector<double> slope;
  std::vector<double> intercept;
  std::vector<double> noise_sigma;  // per cell
};

struct SyntheticTruth {
  std::int64_t signal_channel = 0;
  SignalBox box;
  std::vector<std::int64_t> signal_fortnights;
  std::vector<double> signal_per_year;  // raw regional means s_y
  std::vector<SyntheticTarget> targets;
};

struct SyntheticWorld {
  PredictorCube predictors;                    // fortnight-level, NaN on SST land
  std::vector<Tensor<float>> daily_years;      // only when spec.daily
  std::map<std::string, TargetGrid> targets;
  SyntheticTruth truth;
};

SyntheticWorld gen_synthetic(const SyntheticWorldSpec& spec);

// Writes predictors, per-target grids, the truth record, and dataset.json
// into `dir`.
void save_synthetic_world(const SyntheticWorld& world, const SyntheticWorldSpec& spec,
                          const std::filesystem::path& dir);

}  // namespace gridcast

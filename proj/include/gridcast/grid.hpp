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

#include "gridcast/tensor.hpp"

namespace gridcast {

// Fixed channel inventory of the 25-field predictor stack: five
// pressure-level variables (z, q, t, u, v) at 850/700/500/200 hPa in
// variable-major order, then the five single-level fields. The order is
// frozen; cube manifests carry it and a checksum so reordering is detected.
std::vector<std::string> canonical_channel_names();
inline constexpr std::int64_t kCanonicalChannels = 25;
inline constexpr std::int64_t kCanonicalSstChannel = 20;
inline constexpr std::int64_t kFortnights = 11;

// Static landmask: which grid cells carry valid (non-NaN) target values.
// The index list enumerates true cells in row-major (latitude-major) order;
// it fixes the 2D <-> 1D target correspondence.
struct ValidMask {
  std::int64_t lat = 0;
  std::int64_t lon = 0;
  std::vector<std::uint8_t> cells;        // lat*lon, 1 = valid
  std::vector<std::int64_t> indices;      // flat indices of valid cells, ascending

  std::int64_t count() const { return static_cast<std::int64_t>(indices.size()); }
  bool at(std::int64_t r, std::int64_t c) const { return cells[static_cast<std::size_t>(r * lon + c)] != 0; }
};

// One target variable: (years, lat, lon, 1) with NaN outside the landmass.
struct TargetGrid {
  Tensor<float> values;
  std::vector<std::int64_t> years;

  std::int64_t lat() const { return values.dim(1); }
  std::int64_t lon() const { return values.dim(2); }
};

// Preprocessed or raw predictor stack: (years, fortnights, lat, lon, channels).
struct PredictorCube {
  Tensor<float> values;
  std::vector<std::int64_t> years;
  std::vector<double> lat_coords;
  std::vector<double> lon_coords;
  std::vector<std::string> channel_names;

  std::int64_t n_years() const { return values.dim(0); }
  std::int64_t fortnights() const { return values.dim(1); }
  std::int64_t lat() const { return values.dim(2); }
  std::int64_t lon() const { return values.dim(3); }
  std::int64_t channels() const { return values.dim(4); }
};

// Mask of the year-0 NaN pattern; every other year must match it exactly.
ValidMask build_valid_mask(const TargetGrid& target);

// Select the values at valid cells, in mask order. NaN at a valid cell is a
// data error.
std::vector<float> flatten_target(std::span<const float> grid_year, std::int64_t lat,
                                  std::int64_t lon, const ValidMask& mask);

// Re-insert a target vector into the 2D grid; non-valid cells become NaN.
Tensor<float> reverse_map(std::span<const float> vec, const ValidMask& mask);

// Cube persistence: <base>.gtf payload plus <base>.json manifest carrying
// axis names, year labels, coordinates, channel names and an FNV-1a payload
// checksum.
void save_predictor_cube(const PredictorCube& cube, const std::filesystem::path& base);
PredictorCube load_predictor_cube(const std::filesystem::path& base);

void save_target_grid(const TargetGrid& grid, const std::filesystem::path& base);
TargetGrid load_target_grid(const std::filesystem::path& base);

void save_valid_mask(const ValidMask& mask, const std::filesystem::path& path);
ValidMask load_valid_mask(const std::filesystem::path& path);

// Checksum of the raw float payload (its little-endian byte image).
std::uint64_t payload_checksum(std::span<const float> values);

}  // namespace gridcast

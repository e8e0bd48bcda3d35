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
#include <span>
#include <string>
#include <vector>

#include "gridcast/tensor.hpp"

namespace gridcast {

enum class SplitRole { train, test, full };

// Per-channel min/max scaling parameters. The provenance flag guards against
// normalizing held-out data with statistics that saw it.
struct NormParams {
  std::vector<std::string> channel_names;
  std::vector<double> min_v;
  std::vector<double> max_v;
  bool fitted_on_train = false;

  std::int64_t channels() const { return static_cast<std::int64_t>(min_v.size()); }
};

void save_norm_params(const NormParams& params, const std::filesystem::path& path);
NormParams load_norm_params(const std::filesystem::path& path);

// Year-strided split: test years are {y : y >= start && (y - start) % stride == 0}.
struct SplitSpec {
  std::int64_t start = 1944;
  std::int64_t stride = 4;

  bool is_test(std::int64_t year) const {
    return year >= start && (year - start) % stride == 0;
  }
};

struct YearSplit {
  std::vector<std::int64_t> train_years;
  std::vector<std::int64_t> test_years;
};

YearSplit split_years(std::span<const std::int64_t> years, const SplitSpec& spec);

// Collapse (days, lat, lon, C) daily fields into 11 frames: ten 14-day means
// followed by the mean of the trailing 11 (non-leap) or 12 (leap) days.
Tensor<float> fortnight_means(const Tensor<float>& daily, bool year_is_leap);

// Global per-channel min/max over every value of a channels-last tensor,
// ignoring NaN. `role` is the provenance of the data being scanned.
NormParams fit_minmax(const Tensor<float>& cube, SplitRole role,
                      std::vector<std::string> channel_names = {});

// x -> (x - min) / (max - min), optionally clipped to [0,1]; NaN propagates.
// Applying parameters that were not fitted on the training set to test data
// is a leakage error.
Tensor<float> apply_minmax(const Tensor<float>& cube, const NormParams& params, bool clip,
                           SplitRole data_role);

// Inverse of apply_minmax for one channel.
double denormalize_value(double normalized, double min_v, double max_v);

// Replace NaN in the SST channel with the landmask fill; NaN anywhere else is
// corrupt data.
Tensor<float> impute_sst(const Tensor<float>& cube, std::int64_t sst_channel,
                         float fill = -1.0f);

// 3x3/stride-3 average pooling over the (lat, lon) axes of a (..., lat, lon, C)
// tensor. Latitude must already be divisible by 3; trailing longitude columns
// are dropped until divisible.
Tensor<float> downsample_avgpool3(const Tensor<float>& cube);

struct CoordRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct RoiField {
  Tensor<float> field;
  std::vector<double> lat_coords;
  std::vector<double> lon_coords;
};

// Contiguous sub-grid of a (..., lat, lon, C) field covering all coordinates
// inside the inclusive ranges.
RoiField roi_trim(const Tensor<float>& field, std::span<const double> lat_coords,
                  std::span<const double> lon_coords, CoordRange lat_range,
                  CoordRange lon_range);

}  // namespace gridcast

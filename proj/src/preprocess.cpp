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

#include "gridcast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gridcast/error.hpp"

namespace gridcast {

using nlohmann::json;

namespace {

constexpr std::int64_t kFrames = 11;
constexpr std::int64_t kFrameDays = 14;

// Channel count and row stride of a channels-last tensor.
std::int64_t trailing_channels(const Tensor<float>& cube, const char* op) {
  if (cube.rank() < 1) throw ShapeError(std::string(op) + ": tensor has no channel axis");
  return cube.dim(cube.rank() - 1);
}

}  // namespace

void save_norm_params(const NormParams& params, const std::filesystem::path& path) {
  json j;
  j["fitted_on_train"] = params.fitted_on_train;
  json channels = json::array();
  for (std::int64_t c = 0; c < params.channels(); ++c) {
    json ch;
    ch["name"] = c < static_cast<std::int64_t>(params.channel_names.size())
                     ? params.channel_names[static_cast<std::size_t>(c)]
                     : "ch" + std::to_string(c);
    ch["min"] = params.min_v[static_cast<std::size_t>(c)];
    ch["max"] = params.max_v[static_cast<std::size_t>(c)];
    channels.push_back(ch);
  }
  j["channels"] = channels;
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  out << j.dump(2) << "\n";
}

NormParams load_norm_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingNormParamsError("normalization parameters not found at " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad JSON in " + path.string() + ": " + e.what());
  }
  NormParams p;
  p.fitted_on_train = j.value("fitted_on_train", false);
  for (const auto& ch : j.at("channels")) {
    p.channel_names.push_back(ch.at("name").get<std::string>());
    p.min_v.push_back(ch.at("min").get<double>());
    p.max_v.push_back(ch.at("max").get<double>());
  }
  return p;
}

YearSplit split_years(std::span<const std::int64_t> years, const SplitSpec& spec) {
  if (spec.stride < 1) throw ConfigError("split stride must be >= 1");
  for (std::size_t i = 1; i < years.size(); ++i)
    if (years[i] <= years[i - 1])
      throw ConfigError("year labels must be sorted ascending and unique");
  YearSplit split;
  for (const std::int64_t y : years) {
    if (spec.is_test(y))
      split.test_years.push_back(y);
    else
      split.train_years.push_back(y);
  }
  if (split.train_years.empty() || split.test_years.empty())
    throw ConfigError("year split produced an empty " +
                      std::string(split.train_years.empty() ? "train" : "test") + " set");
  return split;
}

Tensor<float> fortnight_means(const Tensor<float>& daily, bool year_is_leap) {
  if (daily.rank() != 4)
    throw ShapeError("fortnight_means: expected (days, lat, lon, channels), got " +
                     shape_str(daily.dims()));
  const std::int64_t days = daily.dim(0);
  const std::int64_t expected = year_is_leap ? 152 : 151;
  if (days != 151 && days != 152)
    throw DataError("fortnight_means: day count " + std::to_string(days) +
                    " is not a Jan 1 - May 31 window (151 or 152 days)");
  if (days != expected)
    throw DataError("fortnight_means: day count " + std::to_string(days) +
                    " does not match year_is_leap=" + (year_is_leap ? "true" : "false") +
                    " (expected " + std::to_string(expected) + ")");

  const std::int64_t cells = daily.size() / days;
  Tensor<float> out(Shape{kFrames, daily.dim(1), daily.dim(2), daily.dim(3)});
  const float* src = daily.data();
  float* dst = out.data();
  for (std::int64_t f = 0; f < kFrames; ++f) {
    const std::int64_t d0 = f * kFrameDays;
    const std::int64_t d1 = f < kFrames - 1 ? d0 + kFrameDays : days;
    const double inv = 1.0 / static_cast<double>(d1 - d0);
    for (std::int64_t i = 0; i < cells; ++i) {
      double acc = 0.0;
      for (std::int64_t d = d0; d < d1; ++d) acc += static_cast<double>(src[d * cells + i]);
      dst[f * cells + i] = static_cast<float>(acc * inv);
    }
  }
  return out;
}

NormParams fit_minmax(const Tensor<float>& cube, SplitRole role,
                      std::vector<std::string> channel_names) {
  const std::int64_t C = trailing_channels(cube, "fit_minmax");
  if (cube.size() == 0) throw DataError("fit_minmax: empty cube");
  NormParams p;
  p.fitted_on_train = role == SplitRole::train;
  p.min_v.assign(static_cast<std::size_t>(C), std::numeric_limits<double>::infinity());
  p.max_v.assign(static_cast<std::size_t>(C), -std::numeric_limits<double>::infinity());
  const float* v = cube.data();
  const std::int64_t rows = cube.size() / C;
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < C; ++c) {
      const float x = v[r * C + c];
      if (std::isnan(x)) continue;  // SST land cells
      const double d = static_cast<double>(x);
      auto& mn = p.min_v[static_cast<std::size_t>(c)];
      auto& mx = p.max_v[static_cast<std::size_t>(c)];
      if (d < mn) mn = d;
      if (d > mx) mx = d;
    }
  for (std::int64_t c = 0; c < C; ++c)
    if (!std::isfinite(p.min_v[static_cast<std::size_t>(c)]))
      throw DataError("fit_minmax: channel " + std::to_string(c) + " is all-NaN");
  if (channel_names.empty())
    for (std::int64_t c = 0; c < C; ++c) p.channel_names.push_back("ch" + std::to_string(c));
  else
    p.channel_names = std::move(channel_names);
  if (static_cast<std::int64_t>(p.channel_names.size()) != C)
    throw ConfigError("fit_minmax: " + std::to_string(p.channel_names.size()) +
                      " channel names for " + std::to_string(C) + " channels");
  return p;
}

Tensor<float> apply_minmax(const Tensor<float>& cube, const NormParams& params, bool clip,
                           SplitRole data_role) {
  const std::int64_t C = trailing_channels(cube, "apply_minmax");
  if (C != params.channels())
    throw ShapeError("apply_minmax: cube has " + std::to_string(C) + " channels, params have " +
                     std::to_string(params.channels()));
  if (data_role == SplitRole::test && !params.fitted_on_train)
    throw DataError(
        "leakage guard: refusing to normalize test data with parameters not fitted on the "
        "training set");
  for (std::int64_t c = 0; c < C; ++c)
    if (!(params.max_v[static_cast<std::size_t>(c)] > params.min_v[static_cast<std::size_t>(c)]))
      throw DataError("apply_minmax: degenerate channel '" +
                      params.channel_names[static_cast<std::size_t>(c)] + "' (min " +
                      std::to_string(params.min_v[static_cast<std::size_t>(c)]) + " == max " +
                      std::to_string(params.max_v[static_cast<std::size_t>(c)]) + ")");

  Tensor<float> out(cube.dims());
  const float* src = cube.data();
  float* dst = out.data();
  const std::int64_t rows = cube.size() / C;
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < C; ++c) {
      const float x = src[r * C + c];
      if (std::isnan(x)) {
        dst[r * C + c] = x;
        continue;
      }
      const double mn = params.min_v[static_cast<std::size_t>(c)];
      const double mx = params.max_v[static_cast<std::size_t>(c)];
      double y = (static_cast<double>(x) - mn) / (mx - mn);
      if (clip) y = std::clamp(y, 0.0, 1.0);
      dst[r * C + c] = static_cast<float>(y);
    }
  return out;
}

double denormalize_value(double normalized, double min_v, double max_v) {
  return normalized * (max_v - min_v) + min_v;
}

Tensor<float> impute_sst(const Tensor<float>& cube, std::int64_t sst_channel, float fill) {
  const std::int64_t C = trailing_channels(cube, "impute_sst");
  if (sst_channel < 0 || sst_channel >= C)
    throw ConfigError("impute_sst: SST channel " + std::to_string(sst_channel) +
                      " out of range for " + std::to_string(C) + " channels");
  Tensor<float> out = cube.clone();
  float* v = out.data();
  const std::int64_t rows = out.size() / C;
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < C; ++c) {
      if (!std::isnan(v[r * C + c])) continue;
      if (c != sst_channel)
        throw DataError("impute_sst: NaN found in non-SST channel " + std::to_string(c));
      v[r * C + c] = fill;
    }
  return out;
}

Tensor<float> downsample_avgpool3(const Tensor<float>& cube) {
  if (cube.rank() < 3)
    throw ShapeError("downsample_avgpool3: expected (..., lat, lon, channels), got " +
                     shape_str(cube.dims()));
  const std::int64_t rank = cube.rank();
  const std::int64_t lat = cube.dim(rank - 3);
  const std::int64_t lon = cube.dim(rank - 2);
  const std::int64_t C = cube.dim(rank - 1);
  if (lat % 3 != 0)
    throw DataError("downsample_avgpool3: latitude extent " + std::to_string(lat) +
                    " is not divisible by 3 (only trailing longitude columns are trimmed)");
  const std::int64_t lon_trim = lon - lon % 3;
  if (lon_trim == 0) throw DataError("downsample_avgpool3: longitude extent too small");

  Shape out_dims = cube.dims();
  out_dims[static_cast<std::size_t>(rank - 3)] = lat / 3;
  out_dims[static_cast<std::size_t>(rank - 2)] = lon_trim / 3;
  Tensor<float> out(out_dims);

  std::int64_t slabs = 1;
  for (std::int64_t a = 0; a < rank - 3; ++a) slabs *= cube.dim(a);
  const std::int64_t in_slab = lat * lon * C;
  const std::int64_t out_lat = lat / 3, out_lon = lon_trim / 3;
  const std::int64_t out_slab = out_lat * out_lon * C;
  const float* src = cube.data();
  float* dst = out.data();
  for (std::int64_t s = 0; s < slabs; ++s) {
    const float* in = src + s * in_slab;
    float* o = dst + s * out_slab;
    for (std::int64_t r = 0; r < out_lat; ++r)
      for (std::int64_t q = 0; q < out_lon; ++q)
        for (std::int64_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (std::int64_t dr = 0; dr < 3; ++dr)
            for (std::int64_t dq = 0; dq < 3; ++dq)
              acc += static_cast<double>(
                  in[((3 * r + dr) * lon + (3 * q + dq)) * C + c]);
          o[(r * out_lon + q) * C + c] = static_cast<float>(acc / 9.0);
        }
  }
  return out;
}

RoiField roi_trim(const Tensor<float>& field, std::span<const double> lat_coords,
                  std::span<const double> lon_coords, CoordRange lat_range,
                  CoordRange lon_range) {
  if (field.rank() < 3)
    throw ShapeError("roi_trim: expected (..., lat, lon, channels), got " +
                     shape_str(field.dims()));
  const std::int64_t rank = field.rank();
  const std::int64_t lat = field.dim(rank - 3);
  const std::int64_t lon = field.dim(rank - 2);
  const std::int64_t C = field.dim(rank - 1);
  if (static_cast<std::int64_t>(lat_coords.size()) != lat ||
      static_cast<std::int64_t>(lon_coords.size()) != lon)
    throw ShapeError("roi_trim: coordinate arrays do not match field extents");

  constexpr double tol = 1e-9;
  const auto select = [&](std::span<const double> coords, CoordRange range,
                          const char* axis) -> std::pair<std::int64_t, std::int64_t> {
    if (range.lo > range.hi) throw ConfigError(std::string("roi_trim: empty ") + axis + " range");
    if (range.lo < coords.front() - tol || range.hi > coords.back() + tol)
      throw DataError(std::string("roi_trim: requested ") + axis +
                      " range lies outside the field's coordinates");
    std::int64_t first = -1, count = 0;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(coords.size()); ++i) {
      if (coords[i] >= range.lo - tol && coords[i] <= range.hi + tol) {
        if (first < 0) first = i;
        ++count;
      }
    }
    if (count == 0)
      throw DataError(std::string("roi_trim: no grid points inside the requested ") + axis +
                      " range");
    return {first, count};
  };

  const auto [lat0, nlat] = select(lat_coords, lat_range, "lat");
  const auto [lon0, nlon] = select(lon_coords, lon_range, "lon");

  Shape out_dims = field.dims();
  out_dims[static_cast<std::size_t>(rank - 3)] = nlat;
  out_dims[static_cast<std::size_t>(rank - 2)] = nlon;
  RoiField result;
  result.field = Tensor<float>(out_dims);
  result.lat_coords.assign(lat_coords.begin() + lat0, lat_coords.begin() + lat0 + nlat);
  result.lon_coords.assign(lon_coords.begin() + lon0, lon_coords.begin() + lon0 + nlon);

  std::int64_t slabs = 1;
  for (std::int64_t a = 0; a < rank - 3; ++a) slabs *= field.dim(a);
  const float* src = field.data();
  float* dst = result.field.data();
  const std::int64_t in_slab = lat * lon * C;
  const std::int64_t out_slab = nlat * nlon * C;
  for (std::int64_t s = 0; s < slabs; ++s)
    for (std::int64_t r = 0; r < nlat; ++r)
      for (std::int64_t q = 0; q < nlon; ++q)
        for (std::int64_t c = 0; c < C; ++c)
          dst[s * out_slab + (r * nlon + q) * C + c] =
              src[s * in_slab + ((lat0 + r) * lon + (lon0 + q)) * C + c];
  return result;
}

}  // namespace gridcast

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

#include "gridcast/grid.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gridcast/error.hpp"
#include "gridcast/gtf.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

using nlohmann::json;

std::vector<std::string> canonical_channel_names() {
  const char* vars[] = {"z", "q", "t", "u", "v"};
  const char* levels[] = {"850", "700", "500", "200"};
  std::vector<std::string> names;
  names.reserve(kCanonicalChannels);
  for (const char* v : vars)
    for (const char* l : levels) names.push_back(std::string(v) + l);
  for (const char* s : {"sst", "mslp", "t2m", "tcwv", "tp"}) names.push_back(s);
  return names;
}

std::uint64_t payload_checksum(std::span<const float> values) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const float f : values) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                          static_cast<unsigned char>(bits >> 16),
                          static_cast<unsigned char>(bits >> 24)};
    h = fnv1a64(b, 4, h);
  }
  return h;
}

ValidMask build_valid_mask(const TargetGrid& target) {
  const auto& dims = target.values.dims();
  if (dims.size() != 4 || dims[3] != 1)
    throw ShapeError("target grid must be (years, lat, lon, 1), got " + shape_str(dims));
  const std::int64_t n_years = dims[0], lat = dims[1], lon = dims[2];
  if (n_years < 1) throw DataError("target grid has no years");

  ValidMask mask;
  mask.lat = lat;
  mask.lon = lon;
  mask.cells.assign(static_cast<std::size_t>(lat * lon), 0);
  const float* v = target.values.data();
  for (std::int64_t i = 0; i < lat * lon; ++i) {
    if (!std::isnan(v[i])) {
      mask.cells[static_cast<std::size_t>(i)] = 1;
      mask.indices.push_back(i);
    }
  }
  if (mask.indices.empty()) throw DataError("target grid is all-NaN; empty valid mask rejected");

  // The landmask is static: any year disagreeing with year 0 is corrupt.
  for (std::int64_t y = 1; y < n_years; ++y) {
    const float* vy = v + y * lat * lon;
    for (std::int64_t i = 0; i < lat * lon; ++i) {
      const bool valid = !std::isnan(vy[i]);
      if (valid != (mask.cells[static_cast<std::size_t>(i)] != 0)) {
        const std::int64_t year_label =
            y < static_cast<std::int64_t>(target.years.size()) ? target.years[y] : y;
        throw DataError("inconsistent NaN pattern: year " + std::to_string(year_label) +
                        " cell (" + std::to_string(i / lon) + "," + std::to_string(i % lon) +
                        ") disagrees with year 0");
      }
    }
  }
  return mask;
}

std::vector<float> flatten_target(std::span<const float> grid_year, std::int64_t lat,
                                  std::int64_t lon, const ValidMask& mask) {
  if (lat != mask.lat || lon != mask.lon)
    throw ShapeError("flatten_target: grid (" + std::to_string(lat) + "," + std::to_string(lon) +
                     ") vs mask (" + std::to_string(mask.lat) + "," + std::to_string(mask.lon) +
                     ")");
  if (static_cast<std::int64_t>(grid_year.size()) != lat * lon)
    throw ShapeError("flatten_target: grid span size mismatch");
  std::vector<float> out;
  out.reserve(mask.indices.size());
  for (const std::int64_t i : mask.indices) {
    const float v = grid_year[static_cast<std::size_t>(i)];
    if (std::isnan(v))
      throw DataError("NaN at valid cell (" + std::to_string(i / lon) + "," +
                      std::to_string(i % lon) + ")");
    out.push_back(v);
  }
  return out;
}

Tensor<float> reverse_map(std::span<const float> vec, const ValidMask& mask) {
  if (static_cast<std::int64_t>(vec.size()) != mask.count())
    throw ShapeError("reverse_map: vector length " + std::to_string(vec.size()) +
                     " vs mask count " + std::to_string(mask.count()));
  Tensor<float> grid(Shape{mask.lat, mask.lon}, std::numeric_limits<float>::quiet_NaN());
  float* g = grid.data();
  for (std::size_t k = 0; k < vec.size(); ++k)
    g[static_cast<std::size_t>(mask.indices[k])] = vec[k];
  return grid;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void dump_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  out << j.dump(2) << "\n";
}

void check_payload(const json& manifest, const Tensor<float>& values,
                   const std::filesystem::path& base) {
  if (!manifest.contains("checksum_fnv1a64")) return;
  const std::string want = manifest["checksum_fnv1a64"];
  const std::string got = hex64(payload_checksum(values.values()));
  if (want != got)
    throw DataError("payload checksum mismatch for " + base.string() + ": manifest " + want +
                    " vs payload " + got + " (channel order or data changed)");
}

}  // namespace

void save_valid_mask(const ValidMask& mask, const std::filesystem::path& path) {
  json j;
  j["lat"] = mask.lat;
  j["lon"] = mask.lon;
  j["indices"] = mask.indices;
  dump_json(j, path);
}

ValidMask load_valid_mask(const std::filesystem::path& path) {
  const json j = load_json(path);
  ValidMask mask;
  mask.lat = j.at("lat").get<std::int64_t>();
  mask.lon = j.at("lon").get<std::int64_t>();
  mask.cells.assign(static_cast<std::size_t>(mask.lat * mask.lon), 0);
  for (const auto& idx : j.at("indices")) {
    const std::int64_t i = idx.get<std::int64_t>();
    if (i < 0 || i >= mask.lat * mask.lon)
      throw DataError("valid mask index " + std::to_string(i) + " out of range in " +
                      path.string());
    mask.cells[static_cast<std::size_t>(i)] = 1;
    mask.indices.push_back(i);
  }
  if (mask.indices.empty()) throw DataError("empty valid mask in " + path.string());
  return mask;
}

void save_predictor_cube(const PredictorCube& cube, const std::filesystem::path& base) {
  const auto& dims = cube.values.dims();
  if (dims.size() != 5)
    throw ShapeError("predictor cube must be rank 5 (years,fortnights,lat,lon,channels), got " +
                     shape_str(dims));
  if (dims[1] != kFortnights)
    throw ShapeError("predictor cube must have " + std::to_string(kFortnights) +
                     " fortnights, got " + std::to_string(dims[1]));
  if (static_cast<std::int64_t>(cube.years.size()) != dims[0])
    throw DataError("year labels (" + std::to_string(cube.years.size()) +
                    ") do not match cube years axis (" + std::to_string(dims[0]) + ")");
  if (static_cast<std::int64_t>(cube.channel_names.size()) != dims[4])
    throw DataError("channel names (" + std::to_string(cube.channel_names.size()) +
                    ") do not match cube channel axis (" + std::to_string(dims[4]) + ")");

  encode_gtf(cube.values, base.string() + ".gtf");
  json manifest;
  manifest["axes"] = {"year", "fortnight", "lat", "lon", "channel"};
  manifest["extents"] = cube.values.dims();
  manifest["years"] = cube.years;
  manifest["lat_coords"] = cube.lat_coords;
  manifest["lon_coords"] = cube.lon_coords;
  manifest["channels"] = cube.channel_names;
  manifest["checksum_fnv1a64"] = hex64(payload_checksum(cube.values.values()));
  dump_json(manifest, base.string() + ".json");
}

PredictorCube load_predictor_cube(const std::filesystem::path& base) {
  PredictorCube cube;
  cube.values = decode_gtf(base.string() + ".gtf");
  if (cube.values.rank() != 5)
    throw ShapeError("predictor cube must be rank 5, got " + shape_str(cube.values.dims()));
  if (cube.values.dim(1) != kFortnights)
    throw ShapeError("predictor cube must have " + std::to_string(kFortnights) +
                     " fortnights, got " + std::to_string(cube.values.dim(1)));
  const json manifest = load_json(base.string() + ".json");
  cube.years = manifest.at("years").get<std::vector<std::int64_t>>();
  cube.lat_coords = manifest.value("lat_coords", std::vector<double>{});
  cube.lon_coords = manifest.value("lon_coords", std::vector<double>{});
  cube.channel_names = manifest.at("channels").get<std::vector<std::string>>();
  if (static_cast<std::int64_t>(cube.years.size()) != cube.values.dim(0))
    throw DataError("manifest years do not match cube years axis for " + base.string());
  if (static_cast<std::int64_t>(cube.channel_names.size()) != cube.values.dim(4))
    throw DataError("manifest channels do not match cube channel axis for " + base.string());
  check_payload(manifest, cube.values, base);
  return cube;
}

void save_target_grid(const TargetGrid& grid, const std::filesystem::path& base) {
  const auto& dims = grid.values.dims();
  if (dims.size() != 4 || dims[3] != 1)
    throw ShapeError("target grid must be (years, lat, lon, 1), got " + shape_str(dims));
  if (static_cast<std::int64_t>(grid.years.size()) != dims[0])
    throw DataError("year labels do not match target years axis");
  encode_gtf(grid.values, base.string() + ".gtf");
  json manifest;
  manifest["axes"] = {"year", "lat", "lon", "channel"};
  manifest["extents"] = grid.values.dims();
  manifest["years"] = grid.years;
  manifest["checksum_fnv1a64"] = hex64(payload_checksum(grid.values.values()));
  dump_json(manifest, base.string() + ".json");
}

TargetGrid load_target_grid(const std::filesystem::path& base) {
  TargetGrid grid;
  grid.values = decode_gtf(base.string() + ".gtf");
  if (grid.values.rank() != 4 || grid.values.dim(3) != 1)
    throw ShapeError("target grid must be (years, lat, lon, 1), got " +
                     shape_str(grid.values.dims()));
  const json manifest = load_json(base.string() + ".json");
  grid.years = manifest.at("years").get<std::vector<std::int64_t>>();
  if (static_cast<std::int64_t>(grid.years.size()) != grid.values.dim(0))
    throw DataError("manifest years do not match target years axis for " + base.string());
  check_payload(manifest, grid.values, base);
  return grid;
}

}  // namespace gridcast

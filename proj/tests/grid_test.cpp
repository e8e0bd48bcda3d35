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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gridcast/grid.hpp"
#include "gridcast/gtf.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {
namespace {

constexpr float kNan = std::numeric_limits<float>::quiet_NaN();

TargetGrid grid_from(std::vector<float> values, std::int64_t years, std::int64_t lat,
                     std::int64_t lon) {
  TargetGrid g;
  g.values = Tensor<float>::from_values({years, lat, lon, 1}, std::move(values));
  for (std::int64_t y = 0; y < years; ++y) g.years.push_back(2000 + y);
  return g;
}

TEST(ValidMask, CountsNonNanCells) {
  TargetGrid g = grid_from({1, kNan, 2, kNan, 3, kNan, 4, 5, kNan}, 1, 3, 3);
  ValidMask mask = build_valid_mask(g);
  EXPECT_EQ(mask.count(), 5);
  EXPECT_EQ(mask.indices, (std::vector<std::int64_t>{0, 2, 4, 6, 7}));
  EXPECT_TRUE(mask.at(0, 0));
  EXPECT_FALSE(mask.at(0, 1));
}

TEST(ValidMask, StandardGridYields357) {
  // 33x35 grid with exactly 357 valid cells, the standard target layout.
  const std::int64_t lat = 33, lon = 35;
  std::vector<float> values(lat * lon, kNan);
  for (std::int64_t i = 0; i < 357; ++i) values[static_cast<std::size_t>(2 * i)] = 1.f;
  TargetGrid g;
  g.values = Tensor<float>::from_values({1, lat, lon, 1}, std::move(values));
  g.years = {1940};
  EXPECT_EQ(build_valid_mask(g).count(), 357);
}

TEST(ValidMask, AllNanRejected) {
  TargetGrid g = grid_from(std::vector<float>(9, kNan), 1, 3, 3);
  EXPECT_THROW(build_valid_mask(g), DataError);
}

TEST(ValidMask, InconsistentYearPatternRejected) {
  std::vector<float> v(2 * 4, 1.f);
  v[1] = kNan;   // year 0: cell 1 invalid
  v[4 + 2] = kNan;  // year 1: cell 2 invalid instead
  TargetGrid g = grid_from(std::move(v), 2, 2, 2);
  try {
    build_valid_mask(g);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2001"), std::string::npos);
  }
}

TEST(FlattenTarget, PicksValidCellsInMaskOrder) {
  TargetGrid g = grid_from({1, kNan, kNan, 4}, 1, 2, 2);
  ValidMask mask = build_valid_mask(g);
  auto vec = flatten_target(std::span<const float>(g.values.data(), 4), 2, 2, mask);
  EXPECT_EQ(vec, (std::vector<float>{1, 4}));
}

TEST(FlattenTarget, ConstantGridGivesConstantVector) {
  TargetGrid g = grid_from({7, 7, kNan, 7}, 1, 2, 2);
  ValidMask mask = build_valid_mask(g);
  auto vec = flatten_target(std::span<const float>(g.values.data(), 4), 2, 2, mask);
  EXPECT_EQ(vec, (std::vector<float>{7, 7, 7}));
}

TEST(FlattenTarget, NanAtValidCellRejected) {
  TargetGrid g = grid_from({1, kNan, kNan, 4}, 1, 2, 2);
  ValidMask mask = build_valid_mask(g);
  std::vector<float> bad = {kNan, kNan, kNan, 4};
  EXPECT_THROW(flatten_target(std::span<const float>(bad.data(), 4), 2, 2, mask), DataError);
}

TEST(ReverseMap, HandExampleAndLengthCheck) {
  TargetGrid g = grid_from({1, kNan, kNan, 4}, 1, 2, 2);
  ValidMask mask = build_valid_mask(g);
  std::vector<float> vec = {1, 4};
  Tensor<float> grid = reverse_map(vec, mask);
  EXPECT_EQ(grid.dims(), (Shape{2, 2}));
  EXPECT_FLOAT_EQ(grid.values()[0], 1.f);
  EXPECT_TRUE(std::isnan(grid.values()[1]));
  EXPECT_TRUE(std::isnan(grid.values()[2]));
  EXPECT_FLOAT_EQ(grid.values()[3], 4.f);

  std::vector<float> wrong = {1, 2, 3};
  EXPECT_THROW(reverse_map(wrong, mask), ShapeError);
}

TEST(ReverseMap, RoundTripsWithFlatten) {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 20; ++iter) {
    const std::int64_t lat = 3 + static_cast<std::int64_t>(rng_below(rng, 6));
    const std::int64_t lon = 3 + static_cast<std::int64_t>(rng_below(rng, 6));
    std::vector<float> values(static_cast<std::size_t>(lat * lon));
    bool any_valid = false;
    for (auto& v : values) {
      if (rng_below(rng, 3) == 0) {
        v = kNan;
      } else {
        v = static_cast<float>(rng_unit(rng) * 10.0);
        any_valid = true;
      }
    }
    if (!any_valid) values[0] = 1.f;
    TargetGrid g;
    g.values = Tensor<float>::from_values({1, lat, lon, 1}, values);
    g.years = {1940};
    ValidMask mask = build_valid_mask(g);

    auto vec = flatten_target(values, lat, lon, mask);
    Tensor<float> back = reverse_map(vec, mask);
    for (std::int64_t i = 0; i < lat * lon; ++i) {
      if (std::isnan(values[static_cast<std::size_t>(i)]))
        EXPECT_TRUE(std::isnan(back.values()[i]));
      else
        EXPECT_FLOAT_EQ(back.values()[i], values[static_cast<std::size_t>(i)]);
    }
    // And the other composition: flatten(reverse(vec)) == vec.
    auto vec2 = flatten_target(std::span<const float>(back.data(), back.size()), lat, lon, mask);
    EXPECT_EQ(vec, vec2);
  }
}

TEST(ChannelInventory, CanonicalOrderFrozen) {
  const auto names = canonical_channel_names();
  ASSERT_EQ(names.size(), 25u);
  EXPECT_EQ(names[0], "z850");
  EXPECT_EQ(names[3], "z200");
  EXPECT_EQ(names[4], "q850");
  EXPECT_EQ(names[19], "v200");
  EXPECT_EQ(names[20], "sst");
  EXPECT_EQ(names[24], "tp");
  EXPECT_EQ(names[kCanonicalSstChannel], "sst");
}

TEST(CubeManifest, ChecksumCatchesPayloadChange) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gridcast_cube_test";
  fs::create_directories(dir);
  PredictorCube cube;
  cube.values = Tensor<float>(Shape{2, 11, 3, 4, 2}, 0.5f);
  cube.years = {2000, 2001};
  cube.channel_names = {"ch0", "sst"};
  save_predictor_cube(cube, dir / "cube");
  PredictorCube back = load_predictor_cube(dir / "cube");
  EXPECT_EQ(back.years, cube.years);
  EXPECT_EQ(back.channel_names, cube.channel_names);

  // Corrupt one payload value; the manifest checksum must catch it.
  auto t = decode_gtf(dir / "cube.gtf");
  t.values()[0] = 0.25f;
  encode_gtf(t, dir / "cube.gtf");
  EXPECT_THROW(load_predictor_cube(dir / "cube"), DataError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace gridcast

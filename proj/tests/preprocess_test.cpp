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
#include <numeric>
#include <random>

#include "gridcast/preprocess.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {
namespace {

constexpr float kNan = std::numeric_limits<float>::quiet_NaN();

TEST(FortnightMeans, ConstantField) {
  Tensor<float> daily(Shape{151, 2, 2, 1}, 3.5f);
  Tensor<float> frames = fortnight_means(daily, false);
  EXPECT_EQ(frames.dims(), (Shape{11, 2, 2, 1}));
  for (const float v : frames.values()) EXPECT_FLOAT_EQ(v, 3.5f);
}

TEST(FortnightMeans, ArithmeticSeriesOracle) {
  // Daily value = 1-based day index: frame 1 mean = mean(1..14) = 7.5,
  // frame 11 = mean(141..151) = 146.
  Tensor<float> daily(Shape{151, 1, 1, 1});
  for (std::int64_t d = 0; d < 151; ++d) daily.values()[d] = static_cast<float>(d + 1);
  Tensor<float> frames = fortnight_means(daily, false);
  EXPECT_FLOAT_EQ(frames.values()[0], 7.5f);
  EXPECT_FLOAT_EQ(frames.values()[10], 146.0f);
  // Interior frame k: mean of 14 consecutive integers starting at 14k+1.
  for (std::int64_t f = 0; f < 10; ++f)
    EXPECT_FLOAT_EQ(frames.values()[f], static_cast<float>(14 * f) + 7.5f);
}

TEST(FortnightMeans, LeapYearTrailingFrameCoversTwelveDays) {
  Tensor<float> daily(Shape{152, 1, 1, 1}, 0.f);
  // Mark the last 12 days with 1; frame 11 must average exactly those.
  for (std::int64_t d = 140; d < 152; ++d) daily.values()[d] = 1.f;
  Tensor<float> frames = fortnight_means(daily, true);
  EXPECT_FLOAT_EQ(frames.values()[10], 1.0f);
  EXPECT_FLOAT_EQ(frames.values()[9], 0.0f);
}

TEST(FortnightMeans, DayCountValidated) {
  Tensor<float> bad(Shape{150, 1, 1, 1});
  EXPECT_THROW(fortnight_means(bad, false), DataError);
  Tensor<float> leap(Shape{152, 1, 1, 1});
  EXPECT_THROW(fortnight_means(leap, false), DataError);  // flag mismatch
}

TEST(FitMinmax, SimpleRangeAndProvenance) {
  Tensor<float> cube(Shape{2, 3, 1});
  std::iota(cube.values().begin(), cube.values().end(), 10.f);  // 10..15
  NormParams p = fit_minmax(cube, SplitRole::train);
  EXPECT_TRUE(p.fitted_on_train);
  EXPECT_DOUBLE_EQ(p.min_v[0], 10.0);
  EXPECT_DOUBLE_EQ(p.max_v[0], 15.0);

  NormParams q = fit_minmax(cube, SplitRole::full);
  EXPECT_FALSE(q.fitted_on_train);
}

TEST(FitMinmax, ExhaustiveScanOracleOnToyCube) {
  std::mt19937_64 rng(77);
  Tensor<float> cube(Shape{2, 4, 5, 3});
  for (auto& v : cube.values()) v = static_cast<float>(rng_unit(rng) * 100.0 - 50.0);
  NormParams p = fit_minmax(cube, SplitRole::train);
  for (std::int64_t c = 0; c < 3; ++c) {
    double mn = 1e300, mx = -1e300;
    for (std::int64_t i = 0; i < cube.size() / 3; ++i) {
      const double v = cube.values()[i * 3 + c];
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    EXPECT_DOUBLE_EQ(p.min_v[static_cast<std::size_t>(c)], mn);
    EXPECT_DOUBLE_EQ(p.max_v[static_cast<std::size_t>(c)], mx);
  }
}

TEST(FitMinmax, IgnoresNanAndRejectsAllNanChannel) {
  Tensor<float> cube(Shape{3, 2});
  cube.values()[0] = kNan;
  cube.values()[2] = 1.f;
  cube.values()[4] = 5.f;
  cube.values()[1] = 2.f;
  cube.values()[3] = 2.f;
  cube.values()[5] = 2.f;
  NormParams p = fit_minmax(cube, SplitRole::train);
  EXPECT_DOUBLE_EQ(p.min_v[0], 1.0);
  EXPECT_DOUBLE_EQ(p.max_v[0], 5.0);

  Tensor<float> bad(Shape{2, 1}, kNan);
  EXPECT_THROW(fit_minmax(bad, SplitRole::train), DataError);
}

TEST(ApplyMinmax, MidpointClipAndRoundTrip) {
  NormParams p;
  p.channel_names = {"x"};
  p.min_v = {10.0};
  p.max_v = {20.0};
  p.fitted_on_train = true;

  Tensor<float> x = Tensor<float>::from_values({3, 1}, {15.f, 25.f, 10.f});
  Tensor<float> unclipped = apply_minmax(x, p, false, SplitRole::train);
  EXPECT_FLOAT_EQ(unclipped.values()[0], 0.5f);
  EXPECT_FLOAT_EQ(unclipped.values()[1], 1.5f);

  Tensor<float> clipped = apply_minmax(x, p, true, SplitRole::test);
  EXPECT_FLOAT_EQ(clipped.values()[1], 1.0f);

  // Invert on train data: x = y * (max - min) + min.
  for (std::int64_t i = 0; i < 3; ++i) {
    const double back = denormalize_value(unclipped.values()[i], p.min_v[0], p.max_v[0]);
    EXPECT_NEAR(back, x.values()[i], 1e-6);
  }
}

TEST(ApplyMinmax, DegenerateChannelRejected) {
  NormParams p;
  p.channel_names = {"flat"};
  p.min_v = {3.0};
  p.max_v = {3.0};
  p.fitted_on_train = true;
  Tensor<float> x(Shape{2, 1}, 3.f);
  EXPECT_THROW(apply_minmax(x, p, false, SplitRole::train), DataError);
}

TEST(ApplyMinmax, LeakageGuard) {
  NormParams full_fit;
  full_fit.channel_names = {"x"};
  full_fit.min_v = {0.0};
  full_fit.max_v = {1.0};
  full_fit.fitted_on_train = false;  // fitted on all data
  Tensor<float> x(Shape{2, 1}, 0.5f);
  EXPECT_THROW(apply_minmax(x, full_fit, true, SplitRole::test), DataError);
  // Same params on train-role data are allowed.
  EXPECT_NO_THROW(apply_minmax(x, full_fit, false, SplitRole::train));
}

TEST(ImputeSst, FillsLandAndValidatesOtherChannels) {
  Tensor<float> cube(Shape{2, 2, 2});  // (cells..., channels=2), sst = channel 1
  cube.values()[0 * 2 + 0] = 0.3f;
  cube.values()[0 * 2 + 1] = kNan;
  cube.values()[1 * 2 + 0] = 0.4f;
  cube.values()[1 * 2 + 1] = 0.6f;
  cube.values()[2 * 2 + 0] = 0.5f;
  cube.values()[2 * 2 + 1] = kNan;
  cube.values()[3 * 2 + 0] = 0.6f;
  cube.values()[3 * 2 + 1] = 0.8f;
  Tensor<float> filled = impute_sst(cube, 1);
  EXPECT_FLOAT_EQ(filled.values()[1], -1.0f);
  EXPECT_FLOAT_EQ(filled.values()[5], -1.0f);
  for (const float v : filled.values()) EXPECT_FALSE(std::isnan(v));

  // A cube with no NaN passes through unchanged.
  Tensor<float> clean(Shape{2, 2}, 0.5f);
  Tensor<float> same = impute_sst(clean, 1);
  for (std::int64_t i = 0; i < clean.size(); ++i)
    EXPECT_FLOAT_EQ(same.values()[i], clean.values()[i]);

  // NaN planted outside the SST channel is corrupt data.
  Tensor<float> bad = cube.clone();
  bad.values()[0] = kNan;  // channel 0
  EXPECT_THROW(impute_sst(bad, 1), DataError);
}

TEST(Downsample, ProductionShapeAndBlockMean) {
  Tensor<float> field(Shape{261, 541, 1}, 1.f);
  Tensor<float> down = downsample_avgpool3(field);
  EXPECT_EQ(down.dims(), (Shape{87, 180, 1}));

  Tensor<float> block = Tensor<float>::from_values(
      {3, 3, 1}, {1.f, 2.f, 3.f, 4.f, 5.f, 6.f, 7.f, 8.f, 9.f});
  EXPECT_FLOAT_EQ(downsample_avgpool3(block).scalar(), 5.f);
}

TEST(Downsample, MatchesNestedLoopOracleAndPreservesMean) {
  std::mt19937_64 rng(31);
  Tensor<float> grid(Shape{9, 12, 2});
  for (auto& v : grid.values()) v = static_cast<float>(rng_unit(rng));
  Tensor<float> down = downsample_avgpool3(grid);
  EXPECT_EQ(down.dims(), (Shape{3, 4, 2}));
  for (std::int64_t r = 0; r < 3; ++r)
    for (std::int64_t q = 0; q < 4; ++q)
      for (std::int64_t c = 0; c < 2; ++c) {
        double acc = 0.0;
        for (std::int64_t dr = 0; dr < 3; ++dr)
          for (std::int64_t dq = 0; dq < 3; ++dq)
            acc += grid.at({3 * r + dr, 3 * q + dq, c});
        EXPECT_NEAR(down.at({r, q, c}), acc / 9.0, 1e-6);
      }

  // Exactly divisible grids: mean of block-means equals the grand mean.
  double grand = 0.0, pooled = 0.0;
  for (const float v : grid.values()) grand += v;
  for (const float v : down.values()) pooled += v;
  EXPECT_NEAR(grand / grid.size(), pooled / down.size(), 1e-6);
}

TEST(Downsample, TrailingLonTrimAndLatValidation) {
  Tensor<float> grid(Shape{3, 7, 1});
  for (std::int64_t i = 0; i < grid.size(); ++i) grid.values()[i] = static_cast<float>(i % 7);
  Tensor<float> down = downsample_avgpool3(grid);
  EXPECT_EQ(down.dims(), (Shape{1, 2, 1}));  // 7 -> 6 by dropping the last column

  Tensor<float> bad(Shape{4, 6, 1});
  EXPECT_THROW(downsample_avgpool3(bad), DataError);
}

TEST(SplitYears, ProductionRangeAndMembership) {
  std::vector<std::int64_t> years(85);
  std::iota(years.begin(), years.end(), 1940);
  YearSplit split = split_years(years, SplitSpec{});
  EXPECT_EQ(split.test_years.size(), 21u);
  EXPECT_EQ(split.train_years.size(), 64u);
  EXPECT_EQ(split.test_years.front(), 1944);
  EXPECT_EQ(split.test_years.back(), 2024);
  EXPECT_TRUE(SplitSpec{}.is_test(1944));
  EXPECT_FALSE(SplitSpec{}.is_test(1945));
}

TEST(SplitYears, ToyRangeAndValidation) {
  std::vector<std::int64_t> years = {2000, 2001, 2002, 2003, 2004, 2005, 2006, 2007};
  YearSplit split = split_years(years, SplitSpec{2000, 4});
  EXPECT_EQ(split.test_years, (std::vector<std::int64_t>{2000, 2004}));
  EXPECT_EQ(split.train_years.size(), 6u);

  std::vector<std::int64_t> all_test = {2000, 2004};
  EXPECT_THROW(split_years(all_test, SplitSpec{2000, 4}), ConfigError);
  std::vector<std::int64_t> unsorted = {2001, 2000};
  EXPECT_THROW(split_years(unsorted, SplitSpec{2000, 4}), ConfigError);
}

TEST(RoiTrim, MonsoonRoiPointCounts) {
  std::vector<double> lat_coords, lon_coords;
  for (double v = -90.0; v <= 90.0 + 1e-9; v += 0.25) lat_coords.push_back(v);
  for (double v = 0.0; v < 360.0 - 1e-9; v += 0.25) lon_coords.push_back(v);
  Tensor<float> field(Shape{static_cast<std::int64_t>(lat_coords.size()),
                            static_cast<std::int64_t>(lon_coords.size()), 1});
  RoiField roi = roi_trim(field, lat_coords, lon_coords, {-20.0, 45.0}, {30.0, 165.0});
  EXPECT_EQ(roi.field.dim(0), 261);
  EXPECT_EQ(roi.field.dim(1), 541);
  EXPECT_DOUBLE_EQ(roi.lat_coords.front(), -20.0);
  EXPECT_DOUBLE_EQ(roi.lon_coords.back(), 165.0);
}

TEST(RoiTrim, FullRangeIdentityAndToyCount) {
  std::vector<double> lat = {0, 1, 2, 3, 4, 5};
  std::vector<double> lon = {10, 11, 12, 13, 14, 15, 16};
  Tensor<float> field(Shape{6, 7, 1});
  for (std::int64_t i = 0; i < field.size(); ++i) field.values()[i] = static_cast<float>(i);

  RoiField full = roi_trim(field, lat, lon, {0, 5}, {10, 16});
  EXPECT_EQ(full.field.dims(), field.dims());
  for (std::int64_t i = 0; i < field.size(); ++i)
    EXPECT_FLOAT_EQ(full.field.values()[i], field.values()[i]);

  // 1 degree spacing: a 3x4 degree request covers 4x5 grid points.
  RoiField toy = roi_trim(field, lat, lon, {1, 4}, {11, 15});
  EXPECT_EQ(toy.field.dim(0), 4);
  EXPECT_EQ(toy.field.dim(1), 5);
  EXPECT_FLOAT_EQ(toy.field.at({0, 0, 0}), field.at({1, 1, 0}));

  EXPECT_THROW(roi_trim(field, lat, lon, {-5, 3}, {10, 16}), DataError);
}

TEST(NormParams, JsonRoundTrip) {
  namespace fs = std::filesystem;
  NormParams p;
  p.channel_names = {"june"};
  p.min_v = {0.0};
  p.max_v = {58.0408};
  p.fitted_on_train = true;
  const fs::path path = fs::temp_directory_path() / "gridcast_norms_test.json";
  save_norm_params(p, path);
  NormParams back = load_norm_params(path);
  EXPECT_EQ(back.channel_names, p.channel_names);
  EXPECT_DOUBLE_EQ(back.min_v[0], 0.0);
  EXPECT_DOUBLE_EQ(back.max_v[0], 58.0408);
  EXPECT_TRUE(back.fitted_on_train);
  fs::remove(path);
  EXPECT_THROW(load_norm_params(path), MissingNormParamsError);
}

}  // namespace
}  // namespace gridcast

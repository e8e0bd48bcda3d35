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
#include <cstring>
#include <filesystem>
#include <fstream>

#include "gridcast/pipeline.hpp"
#include "gridcast/render.hpp"
#include "gridcast/synth.hpp"

namespace gridcast {
namespace {

constexpr float kNan = std::numeric_limits<float>::quiet_NaN();

SyntheticWorldSpec micro_spec(std::uint64_t seed = 0) {
  SyntheticWorldSpec spec;
  spec.years = 12;
  spec.lat = 12;
  spec.lon = 15;
  spec.channels = 3;
  spec.network_resolution = true;
  spec.target_lat = 6;
  spec.target_lon = 7;
  spec.valid_density = 0.4;
  spec.signal_channel = 0;
  spec.seed = seed;
  return spec;
}

TEST(GenSynthetic, DeterministicPerSeed) {
  SyntheticWorld a = gen_synthetic(micro_spec(5));
  SyntheticWorld b = gen_synthetic(micro_spec(5));
  EXPECT_EQ(0, std::memcmp(a.predictors.values.data(), b.predictors.values.data(),
                           sizeof(float) * a.predictors.values.size()));
  EXPECT_EQ(0, std::memcmp(a.targets.at("jjas").values.data(),
                           b.targets.at("jjas").values.data(),
                           sizeof(float) * a.targets.at("jjas").values.size()));
  SyntheticWorld c = gen_synthetic(micro_spec(6));
  EXPECT_NE(0, std::memcmp(a.predictors.values.data(), c.predictors.values.data(),
                           sizeof(float) * a.predictors.values.size()));
}

TEST(GenSynthetic, NoiselessRegressionRecoversPlantedLaw) {
  SyntheticWorldSpec spec = micro_spec(9);
  spec.snr = 0.0;  // noiseless
  spec.years = 24;
  SyntheticWorld world = gen_synthetic(spec);
  const auto& grid = world.targets.at("jjas");
  const auto& s = world.truth.signal_per_year;
  const auto& truth = world.truth.targets.front();

  // Least-squares slope/intercept of target on the raw regional mean.
  const std::int64_t Y = spec.years;
  double s_mean = 0.0;
  for (const double v : s) s_mean += v;
  s_mean /= static_cast<double>(Y);
  double sxx = 0.0;
  for (const double v : s) sxx += (v - s_mean) * (v - s_mean);

  ValidMask mask = build_valid_mask(grid);
  ASSERT_EQ(mask.count(), static_cast<std::int64_t>(truth.slope.size()));
  const std::int64_t cells = grid.lat() * grid.lon();
  for (std::int64_t j = 0; j < mask.count(); ++j) {
    const std::int64_t cell = mask.indices[static_cast<std::size_t>(j)];
    double t_mean = 0.0, sxy = 0.0;
    for (std::int64_t y = 0; y < Y; ++y) t_mean += grid.values.data()[y * cells + cell];
    t_mean /= static_cast<double>(Y);
    for (std::int64_t y = 0; y < Y; ++y)
      sxy += (s[static_cast<std::size_t>(y)] - s_mean) *
             (grid.values.data()[y * cells + cell] - t_mean);
    const double slope = sxy / sxx;
    const double intercept = t_mean - slope * s_mean;
    EXPECT_NEAR(slope, truth.slope[static_cast<std::size_t>(j)], 1e-3)
        << "cell " << cell;  // float32 storage limits the match
    EXPECT_NEAR(intercept, truth.intercept[static_cast<std::size_t>(j)], 1e-2);
  }
}

TEST(GenSynthetic, MaskDensityHits357Cells) {
  SyntheticWorldSpec spec = micro_spec(1);
  spec.target_lat = 33;
  spec.target_lon = 35;
  spec.valid_density = 0.309;  // 357 / 1155
  SyntheticWorld world = gen_synthetic(spec);
  ValidMask mask = build_valid_mask(world.targets.at("jjas"));
  EXPECT_EQ(mask.count(), 357);
}

TEST(GenSynthetic, SstChannelCarriesStaticLandNaN) {
  SyntheticWorldSpec spec = micro_spec(2);
  SyntheticWorld world = gen_synthetic(spec);
  const std::int64_t sst = spec.resolved_sst_channel();
  EXPECT_EQ(sst, spec.channels - 1);
  const auto& cube = world.predictors.values;
  const std::int64_t cells = spec.lat * spec.lon;
  std::int64_t nan_cells = 0;
  for (std::int64_t i = 0; i < cells; ++i) {
    const bool land = std::isnan(cube.data()[i * spec.channels + sst]);
    nan_cells += land;
    // Same pattern across every year and fortnight.
    for (std::int64_t y = 0; y < spec.years; ++y)
      for (std::int64_t f = 0; f < kFortnights; ++f) {
        const float v =
            cube.data()[(((y * kFortnights + f) * cells) + i) * spec.channels + sst];
        EXPECT_EQ(std::isnan(v), land);
      }
  }
  EXPECT_GT(nan_cells, 0);
  // Non-SST channels have no NaN.
  for (std::int64_t i = 0; i < cube.size(); ++i) {
    if (i % spec.channels != sst) {
      EXPECT_FALSE(std::isnan(cube.values()[i]));
    }
  }
}

TEST(GenSynthetic, DailyModeMatchesFortnightAggregation) {
  SyntheticWorldSpec spec = micro_spec(3);
  spec.years = 2;
  spec.daily = true;
  SyntheticWorld world = gen_synthetic(spec);
  ASSERT_EQ(world.daily_years.size(), 2u);
  // 1940 is a leap year: Jan 1 - May 31 spans 152 days; 1941 spans 151.
  EXPECT_EQ(world.daily_years[0].dims(),
            (Shape{152, spec.lat, spec.lon, spec.channels}));
  EXPECT_EQ(world.daily_years[1].dim(0), 151);
  Tensor<float> frames = fortnight_means(world.daily_years[0], true);
  const std::int64_t slab = frames.size();
  for (std::int64_t i = 0; i < slab; ++i) {
    const float a = frames.values()[i];
    const float b = world.predictors.values.values()[i];
    if (std::isnan(a))
      EXPECT_TRUE(std::isnan(b));
    else
      EXPECT_FLOAT_EQ(a, b);
  }
}

TEST(GenSynthetic, SignalRegionValidation) {
  SyntheticWorldSpec spec = micro_spec(4);
  spec.signal_box = {10, 10, 5, 8};  // runs off the 12x15 grid
  EXPECT_THROW(gen_synthetic(spec), ConfigError);
  SyntheticWorldSpec bad_channel = micro_spec(4);
  bad_channel.signal_channel = bad_channel.channels - 1;  // collides with SST
  EXPECT_THROW(gen_synthetic(bad_channel), ConfigError);
}

TEST(PreprocessSplit, EndToEndShapesAndRanges) {
  SyntheticWorldSpec spec;
  spec.years = 16;
  spec.lat = 30;
  spec.lon = 45;
  spec.channels = 4;
  spec.target_lat = 9;
  spec.target_lon = 10;
  spec.valid_density = 0.5;
  spec.seed = 11;
  SyntheticWorld world = gen_synthetic(spec);
  PipelineOptions opts;  // raw resolution: downsample on
  PreprocessedSplit split = preprocess_split(world.predictors, world.targets, opts);

  // 1940..1955: test years 1944, 1948, 1952.
  EXPECT_EQ(split.train_predictors.values.dims(), (Shape{13, 11, 10, 15, 4}));
  EXPECT_EQ(split.test_predictors.values.dims(), (Shape{3, 11, 10, 15, 4}));
  EXPECT_TRUE(split.predictor_norms.fitted_on_train);

  // Downsampling averages the -1 SST fill with ocean values, so the SST
  // channel spans [-1,1]; all other channels stay in [0,1]. No NaN anywhere.
  const std::int64_t C = 4, sst = 3;
  for (const Tensor<float>* cube :
       {&split.train_predictors.values, &split.test_predictors.values}) {
    const auto vals = cube->values();
    for (std::int64_t i = 0; i < cube->size(); ++i) {
      const float v = vals[static_cast<std::size_t>(i)];
      EXPECT_FALSE(std::isnan(v));
      if (i % C == sst)
        EXPECT_TRUE(v >= -1.f && v <= 1.f) << v;
      else
        EXPECT_TRUE(v >= 0.f && v <= 1.f) << v;
    }
  }
  const auto& ts = split.targets.at("jjas");
  EXPECT_EQ(ts.train.size(), 13u);
  EXPECT_EQ(ts.test.size(), 3u);
  EXPECT_TRUE(ts.norms.fitted_on_train);
  for (const auto& row : ts.train)
    for (const float v : row) {
      EXPECT_GE(v, 0.f);
      EXPECT_LE(v, 1.f);
    }
  for (const auto& row : ts.test)
    for (const float v : row) {
      EXPECT_GE(v, 0.f);
      EXPECT_LE(v, 1.f);
    }
}

TEST(PreprocessSplit, SaveLoadRoundTrip) {
  namespace fs = std::filesystem;
  SyntheticWorld world = gen_synthetic(micro_spec(21));
  PipelineOptions opts;
  opts.downsample = false;
  PreprocessedSplit split = preprocess_split(world.predictors, world.targets, opts);
  const fs::path dir = fs::temp_directory_path() / "gridcast_preproc_test";
  fs::remove_all(dir);
  save_preprocessed(split, dir);
  PreprocessedSplit back = load_preprocessed(dir);
  EXPECT_EQ(back.train_predictors.years, split.train_predictors.years);
  EXPECT_EQ(back.mask.indices, split.mask.indices);
  EXPECT_EQ(back.targets.at("jjas").train, split.targets.at("jjas").train);
  EXPECT_EQ(back.targets.at("jjas").norms.max_v, split.targets.at("jjas").norms.max_v);
  EXPECT_EQ(0, std::memcmp(back.train_predictors.values.data(),
                           split.train_predictors.values.data(),
                           sizeof(float) * split.train_predictors.values.size()));
  fs::remove_all(dir);
}

TEST(Render, IdenticalInputsGiveIdenticalPanels) {
  Tensor<float> truth = Tensor<float>::from_values({2, 3}, {0.f, 1.f, 2.f, kNan, 4.f, 5.f});
  RenderOptions opt;
  opt.cell_px = 2;
  opt.gap_px = 1;
  RenderedImage img = render_pair(truth, truth, opt);
  EXPECT_EQ(img.width, 2 * 3 * 2 + 1);
  EXPECT_EQ(img.height, 2 * 2);
  // Left panel pixels equal right panel pixels.
  for (std::int64_t y = 0; y < img.height; ++y)
    for (std::int64_t x = 0; x < 6; ++x) {
      const std::size_t l = 3 * static_cast<std::size_t>(y * img.width + x);
      const std::size_t r = 3 * static_cast<std::size_t>(y * img.width + 7 + x);
      EXPECT_EQ(0, std::memcmp(&img.rgb[l], &img.rgb[r], 3));
    }
}

TEST(Render, ConstantFieldIsUniform) {
  Tensor<float> truth(Shape{3, 3}, 2.5f);
  RenderedImage img = render_pair(truth, truth, {.cell_px = 1, .gap_px = 0});
  // Degenerate scale renders at the ramp start.
  const auto c0 = rainfall_color(0.0);
  for (std::int64_t p = 0; p < img.width * img.height; ++p) {
    EXPECT_EQ(img.rgb[3 * p], c0[0]);
    EXPECT_EQ(img.rgb[3 * p + 1], c0[1]);
    EXPECT_EQ(img.rgb[3 * p + 2], c0[2]);
  }
}

TEST(Render, CheckerboardMatchesPixelOracle) {
  const std::int64_t H = 4, W = 5;
  Tensor<float> truth(Shape{H, W});
  Tensor<float> pred(Shape{H, W});
  for (std::int64_t r = 0; r < H; ++r)
    for (std::int64_t c = 0; c < W; ++c) {
      const float v = (r + c) % 2 == 0 ? 0.f : 1.f;
      truth.values()[r * W + c] = v;
      pred.values()[r * W + c] = 1.f - v;
    }
  RenderOptions opt;
  opt.cell_px = 3;
  opt.gap_px = 2;
  RenderedImage img = render_pair(truth, pred, opt);

  // Independent rasterization from the documented rules.
  const auto lo = rainfall_color(0.0);
  const auto hi = rainfall_color(1.0);
  for (std::int64_t y = 0; y < img.height; ++y)
    for (std::int64_t x = 0; x < img.width; ++x) {
      std::array<std::uint8_t, 3> expect;
      const std::int64_t left_w = W * opt.cell_px;
      if (x >= left_w && x < left_w + opt.gap_px) {
        expect = kGapColor;
      } else {
        const bool right = x >= left_w + opt.gap_px;
        const std::int64_t gx = right ? (x - left_w - opt.gap_px) / opt.cell_px : x / opt.cell_px;
        const std::int64_t gy = y / opt.cell_px;
        const float v = right ? pred.values()[gy * W + gx] : truth.values()[gy * W + gx];
        expect = v == 0.f ? lo : hi;
      }
      const std::size_t off = 3 * static_cast<std::size_t>(y * img.width + x);
      ASSERT_EQ(img.rgb[off], expect[0]) << "(" << x << "," << y << ")";
      ASSERT_EQ(img.rgb[off + 1], expect[1]);
      ASSERT_EQ(img.rgb[off + 2], expect[2]);
    }
}

TEST(Render, NanPatternMismatchRejected) {
  Tensor<float> truth = Tensor<float>::from_values({1, 2}, {kNan, 1.f});
  Tensor<float> pred = Tensor<float>::from_values({1, 2}, {1.f, kNan});
  EXPECT_THROW(render_pair(truth, pred), DataError);
}

TEST(Render, WritesPpmAndScaleSidecar) {
  namespace fs = std::filesystem;
  Tensor<float> truth = Tensor<float>::from_values({2, 2}, {0.f, kNan, 2.f, 4.f});
  const fs::path base = fs::temp_directory_path() / "gridcast_render_test";
  render_map(truth, truth, base);
  std::ifstream ppm(base.string() + ".ppm", std::ios::binary);
  ASSERT_TRUE(ppm.good());
  std::string magic;
  ppm >> magic;
  EXPECT_EQ(magic, "P6");
  std::ifstream scale(base.string() + "_scale.txt");
  std::string key;
  double v = 0;
  scale >> key >> v;
  EXPECT_EQ(key, "scale_min");
  EXPECT_DOUBLE_EQ(v, 0.0);
  scale >> key >> v;
  EXPECT_EQ(key, "scale_max");
  EXPECT_DOUBLE_EQ(v, 4.0);
  fs::remove(base.string() + ".ppm");
  fs::remove(base.string() + "_scale.txt");
}

}  // namespace
}  // namespace gridcast

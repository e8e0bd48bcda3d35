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

#include "gridcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "gridcast/error.hpp"
#include "gridcast/gtf.hpp"
#include "gridcast/preprocess.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kHarmonics = 4;

bool is_leap(std::int64_t year) {
  return year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
}

// Gaussian via Box-Muller on the fixed rng_unit mapping.
double gauss(std::mt19937_64& rng) {
  double u1 = rng_unit(rng);
  while (u1 <= 0.0) u1 = rng_unit(rng);
  const double u2 = rng_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Smooth random field: a few separable cosine harmonics whose phases drift
// across time steps, plus light white noise. Written additively into `out`.
void fill_smooth_slice(std::span<float> out, std::int64_t H, std::int64_t W, double offset,
                       double scale, std::uint64_t slice_seed, double phase_drift_t) {
  std::mt19937_64 rng(slice_seed);
  std::vector<double> acc(static_cast<std::size_t>(H * W), 0.0);
  std::vector<double> row_f(static_cast<std::size_t>(H));
  std::vector<double> col_f(static_cast<std::size_t>(W));
  for (int k = 1; k <= kHarmonics; ++k) {
    const double amp = 1.0 / k;
    const double fr = 0.5 + rng_unit(rng) * k;
    const double fc = 0.5 + rng_unit(rng) * k;
    const double phi = kTwoPi * rng_unit(rng) + phase_drift_t * (0.3 + 0.2 * k);
    const double psi = kTwoPi * rng_unit(rng) + phase_drift_t * (0.2 + 0.25 * k);
    for (std::int64_t r = 0; r < H; ++r)
      row_f[static_cast<std::size_t>(r)] =
          std::cos(kTwoPi * fr * static_cast<double>(r) / static_cast<double>(H) + phi);
    for (std::int64_t c = 0; c < W; ++c)
      col_f[static_cast<std::size_t>(c)] =
          std::cos(kTwoPi * fc * static_cast<double>(c) / static_cast<double>(W) + psi);
    for (std::int64_t r = 0; r < H; ++r) {
      const double rf = amp * row_f[static_cast<std::size_t>(r)];
      for (std::int64_t c = 0; c < W; ++c)
        acc[static_cast<std::size_t>(r * W + c)] += rf * col_f[static_cast<std::size_t>(c)];
    }
  }
  for (std::int64_t i = 0; i < H * W; ++i) {
    const double noise = 0.05 * (2.0 * rng_unit(rng) - 1.0);
    out[static_cast<std::size_t>(i)] = static_cast<float>(offset + scale * (acc[static_cast<std::size_t>(i)] + noise));
  }
}

// Exactly-n-cell mask: the n largest values of a seeded smooth field.
std::vector<std::uint8_t> smooth_mask(std::int64_t H, std::int64_t W, std::int64_t n_cells,
                                      std::uint64_t seed) {
  std::vector<float> field(static_cast<std::size_t>(H * W));
  fill_smooth_slice(field, H, W, 0.0, 1.0, seed, 0.0);
  std::vector<std::int64_t> order(field.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return field[static_cast<std::size_t>(a)] > field[static_cast<std::size_t>(b)];
  });
  std::vector<std::uint8_t> mask(field.size(), 0);
  for (std::int64_t i = 0; i < n_cells; ++i)
    mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  return mask;
}

SignalBox default_box(std::int64_t lat, std::int64_t lon) {
  SignalBox box;
  box.height = std::max<std::int64_t>(1, lat / 4);
  box.width = std::max<std::int64_t>(1, lon / 4);
  box.row = lat / 4;
  box.col = lon / 4;
  return box;
}

void validate_spec(const SyntheticWorldSpec& spec, const SignalBox& box) {
  if (spec.years < 2) throw ConfigError("gen_synthetic: need at least 2 years");
  if (spec.lat < 2 || spec.lon < 2 || spec.channels < 1)
    throw ConfigError("gen_synthetic: bad predictor grid");
  if (!spec.network_resolution && spec.lat % 3 != 0)
    throw ConfigError("gen_synthetic: raw-resolution latitude must be divisible by 3");
  if (spec.target_lat < 1 || spec.target_lon < 1)
    throw ConfigError("gen_synthetic: bad target grid");
  if (spec.valid_density <= 0.0 || spec.valid_density > 1.0)
    throw ConfigError("gen_synthetic: valid_density must be in (0,1]");
  if (spec.signal_channel < 0 || spec.signal_channel >= spec.channels)
    throw ConfigError("gen_synthetic: signal channel out of range");
  if (spec.signal_channel == spec.resolved_sst_channel())
    throw ConfigError("gen_synthetic: signal channel must differ from the SST channel");
  if (box.row < 0 || box.col < 0 || box.height < 1 || box.width < 1 ||
      box.row + box.height > spec.lat || box.col + box.width > spec.lon)
    throw ConfigError("gen_synthetic: signal region lies outside the predictor grid");
  for (const auto f : spec.signal_fortnights)
    if (f < 0 || f >= kFortnights)
      throw ConfigError("gen_synthetic: signal fortnight index out of range");
  if (spec.signal_fortnights.empty())
    throw ConfigError("gen_synthetic: no signal fortnights");
  if (spec.target_names.empty()) throw ConfigError("gen_synthetic: no target names");
}

}  // namespace

SyntheticWorld gen_synthetic(const SyntheticWorldSpec& spec) {
  const SignalBox box =
      spec.signal_box.height > 0 ? spec.signal_box : default_box(spec.lat, spec.lon);
  validate_spec(spec, box);

  SyntheticWorld world;
  const std::int64_t Y = spec.years, H = spec.lat, W = spec.lon, C = spec.channels;
  const std::int64_t sst = spec.resolved_sst_channel();

  // Per-channel physical-looking offsets and scales.
  std::vector<double> offsets(static_cast<std::size_t>(C)), scales(static_cast<std::size_t>(C));
  {
    std::mt19937_64 rng(derive_seed(spec.seed, "channel-scales"));
    for (std::int64_t c = 0; c < C; ++c) {
      offsets[static_cast<std::size_t>(c)] = 100.0 * (c + 1) + 50.0 * rng_unit(rng);
      scales[static_cast<std::size_t>(c)] = 5.0 * (1.0 + rng_unit(rng));
    }
  }

  world.predictors.values = Tensor<float>(Shape{Y, kFortnights, H, W, C});
  world.predictors.channel_names.reserve(static_cast<std::size_t>(C));
  if (C == kCanonicalChannels) {
    world.predictors.channel_names = canonical_channel_names();
  } else {
    for (std::int64_t c = 0; c < C; ++c)
      world.predictors.channel_names.push_back(c == sst ? "sst" : "ch" + std::to_string(c));
  }
  for (std::int64_t y = 0; y < Y; ++y)
    world.predictors.years.push_back(spec.first_year + y);

  const std::int64_t cell_stride = C;
  const std::int64_t slice_sz = H * W;
  std::vector<float> slice(static_cast<std::size_t>(slice_sz));

  if (spec.daily) {
    // Daily fields first; fortnight frames are their means, so the planted
    // signal is identical no matter which path the pipeline takes.
    for (std::int64_t y = 0; y < Y; ++y) {
      const std::int64_t days = is_leap(spec.first_year + y) ? 152 : 151;
      Tensor<float> daily(Shape{days, H, W, C});
      for (std::int64_t c = 0; c < C; ++c) {
        const std::uint64_t base_seed =
            derive_seed(spec.seed, "daily/y" + std::to_string(y) + "/c" + std::to_string(c));
        for (std::int64_t d = 0; d < days; ++d) {
          fill_smooth_slice(slice, H, W, offsets[static_cast<std::size_t>(c)],
                            scales[static_cast<std::size_t>(c)], derive_seed(base_seed, "phase"),
                            0.05 * static_cast<double>(d));
          float* dst = daily.data() + d * slice_sz * cell_stride + c;
          for (std::int64_t i = 0; i < slice_sz; ++i)
            dst[i * cell_stride] = slice[static_cast<std::size_t>(i)];
        }
      }
      Tensor<float> frames = fortnight_means(daily, days == 152);
      std::copy_n(frames.data(), frames.size(),
                  world.predictors.values.data() + y * kFortnights * slice_sz * cell_stride);
      world.daily_years.push_back(std::move(daily));
    }
  } else {
    for (std::int64_t y = 0; y < Y; ++y)
      for (std::int64_t f = 0; f < kFortnights; ++f)
        for (std::int64_t c = 0; c < C; ++c) {
          fill_smooth_slice(
              slice, H, W, offsets[static_cast<std::size_t>(c)],
              scales[static_cast<std::size_t>(c)],
              derive_seed(spec.seed, "fortnight/y" + std::to_string(y) + "/c" + std::to_string(c)),
              0.7 * static_cast<double>(f));
          float* dst =
              world.predictors.values.data() + ((y * kFortnights + f) * slice_sz) * cell_stride + c;
          for (std::int64_t i = 0; i < slice_sz; ++i)
            dst[i * cell_stride] = slice[static_cast<std::size_t>(i)];
        }
  }

  // Static SST landmask: NaN holes the imputation step must fill.
  {
    const std::int64_t land_cells = std::llround(0.3 * static_cast<double>(slice_sz));
    const auto land = smooth_mask(H, W, land_cells, derive_seed(spec.seed, "sst-land"));
    float* base = world.predictors.values.data();
    for (std::int64_t y = 0; y < Y; ++y)
      for (std::int64_t f = 0; f < kFortnights; ++f)
        for (std::int64_t i = 0; i < slice_sz; ++i)
          if (land[static_cast<std::size_t>(i)])
            base[((y * kFortnights + f) * slice_sz + i) * cell_stride + sst] =
                std::numeric_limits<float>::quiet_NaN();
    for (auto& daily : world.daily_years) {
      const std::int64_t days = daily.dim(0);
      float* d = daily.data();
      for (std::int64_t t = 0; t < days; ++t)
        for (std::int64_t i = 0; i < slice_sz; ++i)
          if (land[static_cast<std::size_t>(i)])
            d[(t * slice_sz + i) * cell_stride + sst] = std::numeric_limits<float>::quiet_NaN();
    }
  }

  // Regional-mean signal per year over the designated fortnights and box.
  world.truth.signal_channel = spec.signal_channel;
  world.truth.box = box;
  world.truth.signal_fortnights = spec.signal_fortnights;
  for (std::int64_t y = 0; y < Y; ++y) {
    double acc = 0.0;
    std::int64_t n = 0;
    for (const std::int64_t f : spec.signal_fortnights)
      for (std::int64_t r = box.row; r < box.row + box.height; ++r)
        for (std::int64_t c = box.col; c < box.col + box.width; ++c) {
          acc += static_cast<double>(
              world.predictors.values.data()[(((y * kFortnights + f) * H + r) * W + c) * C +
                                             spec.signal_channel]);
          ++n;
        }
    world.truth.signal_per_year.push_back(acc / static_cast<double>(n));
  }
  double s_mean = 0.0, s_var = 0.0;
  for (const double s : world.truth.signal_per_year) s_mean += s;
  s_mean /= static_cast<double>(Y);
  for (const double s : world.truth.signal_per_year) s_var += (s - s_mean) * (s - s_mean);
  s_var /= static_cast<double>(Y);
  const double s_std = std::sqrt(std::max(s_var, 1e-30));

  // Valid-cell mask for the target grid, exactly round(density * cells).
  const std::int64_t mask_cells =
      std::llround(spec.valid_density * static_cast<double>(spec.target_lat * spec.target_lon));
  if (mask_cells < 1) throw ConfigError("gen_synthetic: valid mask would be empty");
  const auto valid =
      smooth_mask(spec.target_lat, spec.target_lon, mask_cells, derive_seed(spec.seed, "landmask"));

  for (const auto& name : spec.target_names) {
    TargetGrid grid;
    grid.values = Tensor<float>(Shape{Y, spec.target_lat, spec.target_lon, 1},
                                std::numeric_limits<float>::quiet_NaN());
    grid.years = world.predictors.years;

    SyntheticTarget truth_t;
    truth_t.name = name;
    std::mt19937_64 coef_rng(derive_seed(spec.seed, "target-coef/" + name));
    std::mt19937_64 noise_rng(derive_seed(spec.seed, "target-noise/" + name));
    std::vector<double> gain, base;
    for (std::int64_t i = 0; i < spec.target_lat * spec.target_lon; ++i) {
      if (!valid[static_cast<std::size_t>(i)]) continue;
      gain.push_back(0.5 + rng_unit(coef_rng));        // c_j in [0.5, 1.5] mm/day per std
      base.push_back(2.0 + 6.0 * rng_unit(coef_rng));  // b_j in [2, 8] mm/day
    }
    const double snr = spec.snr;
    std::size_t j = 0;
    for (std::int64_t i = 0; i < spec.target_lat * spec.target_lon; ++i) {
      if (!valid[static_cast<std::size_t>(i)]) continue;
      const double c_j = gain[j];
      const double b_j = base[j];
      const double sigma = snr > 0.0 ? c_j / snr : 0.0;
      truth_t.slope.push_back(c_j / s_std);
      truth_t.intercept.push_back(b_j - c_j * s_mean / s_std);
      truth_t.noise_sigma.push_back(sigma);
      for (std::int64_t y = 0; y < Y; ++y) {
        const double s_tilde = (world.truth.signal_per_year[static_cast<std::size_t>(y)] - s_mean) / s_std;
        const double v = b_j + c_j * s_tilde + (sigma > 0.0 ? sigma * gauss(noise_rng) : 0.0);
        grid.values.data()[(y * spec.target_lat * spec.target_lon + i)] = static_cast<float>(v);
      }
      ++j;
    }
    world.truth.targets.push_back(std::move(truth_t));
    world.targets.emplace(name, std::move(grid));
  }
  return world;
}

void save_synthetic_world(const SyntheticWorld& world, const SyntheticWorldSpec& spec,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (spec.daily) {
    for (std::size_t y = 0; y < world.daily_years.size(); ++y)
      encode_gtf(world.daily_years[y],
                 dir / ("daily_" + std::to_string(world.predictors.years[y]) + ".gtf"));
  }
  save_predictor_cube(world.predictors, dir / "predictors");
  for (const auto& [name, grid] : world.targets) save_target_grid(grid, dir / ("target_" + name));

  json truth;
  truth["signal_channel"] = world.truth.signal_channel;
  truth["signal_box"] = {{"row", world.truth.box.row},
                         {"col", world.truth.box.col},
                         {"height", world.truth.box.height},
                         {"width", world.truth.box.width}};
  truth["signal_fortnights"] = world.truth.signal_fortnights;
  truth["signal_per_year"] = world.truth.signal_per_year;
  json jt = json::array();
  for (const auto& t : world.truth.targets)
    jt.push_back({{"name", t.name},
                  {"slope", t.slope},
                  {"intercept", t.intercept},
                  {"noise_sigma", t.noise_sigma}});
  truth["targets"] = jt;
  std::ofstream tf(dir / "truth.json");
  tf << truth.dump(2) << "\n";

  json ds;
  ds["kind"] = "synthetic";
  ds["resolution"] = spec.network_resolution ? "network" : "raw";
  ds["daily"] = spec.daily;
  ds["years"] = world.predictors.years;
  ds["seed"] = spec.seed;
  ds["sst_channel"] = spec.resolved_sst_channel();
  json names = json::array();
  for (const auto& [name, grid] : world.targets) names.push_back(name);
  ds["targets"] = names;
  std::ofstream df(dir / "dataset.json");
  df << ds.dump(2) << "\n";
}

}  // namespace gridcast

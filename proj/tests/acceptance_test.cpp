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
//
// Acceptance suite: ten numbered end-to-end criteria, each printing one
// PASS/FAIL line. Tolerances are pinned in code.

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>

#include "gridcast/augment.hpp"
#include "gridcast/checkpoint.hpp"
#include "gridcast/gradcheck.hpp"
#include "gridcast/gtf.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/network.hpp"
#include "gridcast/pipeline.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/runmeta.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/train.hpp"

namespace gridcast {
namespace {

namespace fs = std::filesystem;

void print_line(int criterion, const char* description) {
  std::cout << "[CRITERION " << criterion << "] "
            << (::testing::Test::HasFailure() ? "FAIL" : "PASS") << " - " << description
            << std::endl;
}

TEST(Acceptance, Criterion01_YearSplitProtocol) {
  std::vector<std::int64_t> years(85);
  std::iota(years.begin(), years.end(), 1940);
  const YearSplit split = split_years(years, SplitSpec{1944, 4});
  std::vector<std::int64_t> expect_test;
  for (std::int64_t y = 1944; y <= 2024; y += 4) expect_test.push_back(y);
  EXPECT_EQ(split.test_years, expect_test);
  EXPECT_EQ(split.test_years.size(), 21u);
  EXPECT_EQ(split.train_years.size(), 64u);
  const SplitSpec production_split{1944, 4};
  for (const auto y : split.train_years) EXPECT_FALSE(production_split.is_test(y));
  print_line(1, "split 1940-2024 -> 21 test years {1944,1948,...,2024}, 64 train years");
}

TEST(Acceptance, Criterion02_AugmentationCount) {
  std::vector<std::int64_t> years(64);
  std::iota(years.begin(), years.end(), 1940);
  const WindowSpec window{};  // (40,60) stride (26,40)
  const auto positions = window_positions(87, 180, window);
  EXPECT_EQ(positions.size(), 8u);
  const AugmentPlan plan = augment_dataset(years, 87, 180, window, 0);
  EXPECT_EQ(plan.entries.size(), 1088u);
  std::map<std::int64_t, int> per_year;
  for (const auto& e : plan.entries) per_year[e.year_label]++;
  for (const auto& [year, count] : per_year) EXPECT_EQ(count, 17) << year;
  print_line(2, "64 train years x (1 + 2*8 window positions) = 1088 samples, 17 per year");
}

TEST(Acceptance, Criterion03_ShapeLedgerTableGrid) {
  Tensor<float> x(Shape{1, 11, 87, 180, 25}, 0.3f);
  for (const std::int64_t bottleneck : {64, 128, 256, 512}) {
    for (std::int64_t blocks = 1; blocks <= 4; ++blocks) {
      NetworkSpec spec;
      spec.num_blocks = blocks;
      spec.bottleneck = bottleneck;
      const EncoderShapes shapes = encoder_shapes(spec);
      const std::int64_t expect_t[] = {6, 3, 2, 1};
      for (std::int64_t k = 0; k < blocks; ++k)
        ASSERT_EQ(shapes.block_out[static_cast<std::size_t>(k)][0], expect_t[k]);
      NetworkState<float> state = init_params<float>(spec, 1);
      Tensor<float> y = forward(spec, state, x, Mode::infer);
      ASSERT_EQ(y.dims(), (Shape{1, 357})) << bottleneck << "x" << blocks;
      // Collapse kernel spans the encoder's final temporal extent exactly.
      ASSERT_EQ(state.collapse.kernel.dim(0), expect_t[blocks - 1]);
    }
  }
  print_line(3, "all 16 experiment-grid configs: forward (357,), temporal 11->6->3->2->1, collapse to 1");
}

TEST(Acceptance, Criterion04_MetricOracles) {
  std::mt19937_64 rng(424242);
  for (int pair = 0; pair < 1000; ++pair) {
    std::vector<double> y(357), yhat(357);
    for (std::size_t i = 0; i < 357; ++i) {
      y[i] = rng_unit(rng);
      yhat[i] = rng_unit(rng);
    }
    double se = 0.0, ae = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < 357; ++i) {
      se += (y[i] - yhat[i]) * (y[i] - yhat[i]);
      ae += std::fabs(y[i] - yhat[i]);
      mean += y[i];
    }
    const double mse = metric_mse(y, yhat);
    const double mae = metric_mae(y, yhat);
    const double snmae = metric_snmae(y, yhat);
    ASSERT_NEAR(mse, se / 357.0, 1e-12);
    ASSERT_NEAR(mae, ae / 357.0, 1e-12);
    ASSERT_NEAR(snmae, (ae / 357.0) / (mean / 357.0 + 1e-8), 1e-12);
    ASSERT_LE(mae * mae, mse + 1e-15);
  }
  std::vector<double> perfect(357, 0.42);
  EXPECT_EQ(metric_snmae(perfect, perfect), 0.0);
  print_line(4, "MSE/MAE/snMAE match exhaustive sums to 1e-12 on 1000 pairs; MAE^2 <= MSE; snMAE(perfect)=0");
}

TEST(Acceptance, Criterion05_Denormalization) {
  const double mae_phys = 0.04563 * (58.0408 - 0.0);
  EXPECT_NEAR(mae_phys, 2.648, 0.005);
  EXPECT_NEAR(denormalize_value(0.04563, 0.0, 58.0408), mae_phys, 1e-12);
  print_line(5, "MAE_norm 0.04563 with June range (0, 58.0408) -> 2.648 +/- 0.005 mm/day");
}

TEST(Acceptance, Criterion06_FullMicroNetworkGradients) {
  NetworkSpec spec;
  spec.num_blocks = 1;
  spec.bottleneck = 8;
  spec.output_units = 5;
  spec.dropout_rate = 0.0;  // deterministic forward for the oracle
  spec.l2_coeff = 0.0;
  spec.input = {2, 12, 12, 3};
  NetworkState<double> state = init_params<double>(spec, 7);

  std::mt19937_64 rng(99);
  Tensor<double> x(Shape{1, 2, 12, 12, 3});
  for (auto& v : x.values()) v = rng_unit(rng);
  Tensor<double> target(Shape{1, 5});
  for (auto& v : target.values()) v = rng_unit(rng);

  auto forward_fn = [&](GradTape<double>* tape) {
    Tensor<double> pred = forward(spec, state, x, Mode::train, tape, 0);
    return mse_loss(pred, target, {}, tape);
  };
  const auto report = grad_check(forward_fn, trainable_params(state), 1e-5);
  EXPECT_LE(report.max_rel_deviation, 1e-3)
      << report.worst_param << "[" << report.worst_index << "] tape=" << report.tape_grad
      << " fd=" << report.fd_grad;
  EXPECT_GT(report.elements_checked, 10000);
  print_line(6, "full micro-network tape gradients vs central differences: max rel dev <= 1e-3");
}

// Shared state for criteria 7 and 10: one synthetic-learnability pipeline.
struct LearnabilityRun {
  SyntheticWorldSpec world_spec;
  PreprocessedSplit split;
  AugmentPlan plan;
  NetworkSpec net;
  TrainConfig config;
  TrainResult result;
  MetricsReport model_report;
  MetricsReport baseline_report;
};

LearnabilityRun run_learnability_pipeline() {
  LearnabilityRun run;
  run.world_spec.years = 32;
  run.world_spec.first_year = 1940;
  run.world_spec.lat = 30;
  run.world_spec.lon = 45;
  run.world_spec.channels = 6;
  run.world_spec.target_lat = 33;
  run.world_spec.target_lon = 35;
  run.world_spec.valid_density = 0.309;
  run.world_spec.snr = 5.0;
  run.world_spec.seed = 7;

  SyntheticWorld world = gen_synthetic(run.world_spec);
  PipelineOptions opts;  // raw grid: downsample (30,45) -> (10,15)
  run.split = preprocess_split(world.predictors, world.targets, opts);

  WindowSpec window{6, 8, 4, 5, -1.0f};
  run.plan = augment_dataset(run.split.train_predictors.years, 10, 15, window, 0);

  run.net.num_blocks = 1;
  run.net.bottleneck = 64;
  run.net.dropout_rate = 0.2;
  run.net.l2_coeff = 1e-5;
  run.net.output_units = run.split.mask.count();
  run.net.input = {11, 10, 15, 6};

  run.config.target = "jjas";
  run.config.epochs = 30;
  run.config.patience = 30;
  run.config.batch_size = 8;
  run.config.learning_rate = 2e-3;
  run.config.init_seed = 1;

  const auto& ts = run.split.targets.at("jjas");
  TrainDataset data = make_train_dataset(run.split.train_predictors, ts.train, run.plan);
  run.result = train(run.net, run.config, data);

  EvalSet set;
  set.predictors = &run.split.test_predictors;
  set.targets_norm = ts.test;
  run.model_report = evaluate(run.net, run.result.state, set, ts.norms);
  std::vector<std::vector<double>> train_targets;
  for (const auto& row : ts.train) train_targets.emplace_back(row.begin(), row.end());
  run.baseline_report = evaluate_constant(climatology_baseline(train_targets), set, ts.norms);
  return run;
}

LearnabilityRun& learnability() {
  static LearnabilityRun run = run_learnability_pipeline();
  return run;
}

TEST(Acceptance, Criterion07_SyntheticLearnability) {
  LearnabilityRun& run = learnability();
  ASSERT_FALSE(run.result.history.epoch_loss.empty());
  const double initial = run.result.history.epoch_loss.front();
  bool halved_within_30 = false;
  for (std::size_t e = 0; e < run.result.history.epoch_loss.size() && e < 30; ++e)
    if (run.result.history.epoch_loss[e] < 0.5 * initial) halved_within_30 = true;
  EXPECT_TRUE(halved_within_30) << "initial " << initial << ", best "
                                << run.result.history.best_loss;
  EXPECT_LE(run.model_report.mse, 0.8 * run.baseline_report.mse)
      << "model " << run.model_report.mse << " vs climatology " << run.baseline_report.mse;
  std::cout << "    model test MSE " << run.model_report.mse << " vs climatology "
            << run.baseline_report.mse << " (ratio "
            << run.model_report.mse / run.baseline_report.mse << ")\n";
  print_line(7, "planted-teleconnection dataset: trained MSE <= 0.8x climatology, loss halves within 30 epochs");
}

TEST(Acceptance, Criterion08_PipelineInvariants) {
  // Fortnight partition law.
  EXPECT_EQ(10 * 14 + 11, 151);
  EXPECT_EQ(10 * 14 + 12, 152);
  for (const bool leap : {false, true}) {
    const std::int64_t days = leap ? 152 : 151;
    Tensor<float> daily(Shape{days, 1, 1, 1});
    for (std::int64_t d = 0; d < days; ++d) daily.values()[d] = static_cast<float>(d);
    Tensor<float> frames = fortnight_means(daily, leap);
    // Frame 11 averages exactly the trailing 11 or 12 day indices.
    double expect = 0.0;
    for (std::int64_t d = 140; d < days; ++d) expect += d;
    expect /= static_cast<double>(days - 140);
    EXPECT_NEAR(frames.values()[10], expect, 1e-4);
  }

  // Downsample (261,541) -> (87,180) against the nested-loop block mean.
  std::mt19937_64 rng(5150);
  Tensor<float> field(Shape{261, 541, 2});
  for (auto& v : field.values()) v = static_cast<float>(rng_unit(rng));
  Tensor<float> down = downsample_avgpool3(field);
  ASSERT_EQ(down.dims(), (Shape{87, 180, 2}));
  for (int check = 0; check < 2000; ++check) {
    const std::int64_t r = static_cast<std::int64_t>(rng_below(rng, 87));
    const std::int64_t q = static_cast<std::int64_t>(rng_below(rng, 180));
    const std::int64_t c = static_cast<std::int64_t>(rng_below(rng, 2));
    double acc = 0.0;
    for (std::int64_t dr = 0; dr < 3; ++dr)
      for (std::int64_t dq = 0; dq < 3; ++dq) acc += field.at({3 * r + dr, 3 * q + dq, c});
    ASSERT_NEAR(down.at({r, q, c}), acc / 9.0, 1e-6);
  }

  // Normalization ranges and SST imputation through the real pipeline.
  SyntheticWorldSpec ws;
  ws.years = 16;
  ws.lat = 30;
  ws.lon = 45;
  ws.channels = 4;
  ws.target_lat = 9;
  ws.target_lon = 10;
  ws.valid_density = 0.5;
  ws.seed = 3;
  SyntheticWorld world = gen_synthetic(ws);
  const std::int64_t sst = ws.resolved_sst_channel();

  // Stage-level: normalized train data lies in [0,1]; imputation turns every
  // NaN into exactly -1.0 and only in the SST channel.
  const NormParams norms =
      fit_minmax(world.predictors.values, SplitRole::train, world.predictors.channel_names);
  Tensor<float> normalized =
      apply_minmax(world.predictors.values, norms, false, SplitRole::train);
  Tensor<float> imputed = impute_sst(normalized, sst);
  const std::int64_t C = ws.channels;
  std::int64_t filled = 0;
  for (std::int64_t i = 0; i < normalized.size(); ++i) {
    const float before = normalized.values()[i];
    const float after = imputed.values()[i];
    EXPECT_FALSE(std::isnan(after));
    if (std::isnan(before)) {
      ASSERT_EQ(i % C, sst);
      ASSERT_EQ(after, -1.0f);
      ++filled;
    } else {
      ASSERT_GE(after, 0.0f);
      ASSERT_LE(after, 1.0f);
    }
  }
  EXPECT_GT(filled, 0);

  // End to end: no NaN anywhere downstream, clipped test data in range.
  PreprocessedSplit split = preprocess_split(world.predictors, world.targets, PipelineOptions{});
  for (const Tensor<float>* cube :
       {&split.train_predictors.values, &split.test_predictors.values})
    for (const float v : cube->values()) {
      ASSERT_FALSE(std::isnan(v));
      ASSERT_GE(v, -1.0f);
      ASSERT_LE(v, 1.0f);
    }
  for (const auto& row : split.targets.at("jjas").test)
    for (const float v : row) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  print_line(8, "fortnight partition, block-mean downsample oracle, [0,1] ranges, SST fill -1.0, no NaN downstream");
}

TEST(Acceptance, Criterion09_RoundTrips) {
  const fs::path dir = fs::temp_directory_path() / "gridcast_acceptance_c9";
  fs::create_directories(dir);
  std::mt19937_64 rng(909);

  // GTF: bit-exact including NaN payloads.
  for (int iter = 0; iter < 10; ++iter) {
    Tensor<float> t(Shape{4, 5, 3});
    for (auto& v : t.values())
      v = rng_below(rng, 8) == 0 ? std::numeric_limits<float>::quiet_NaN()
                                 : static_cast<float>(rng_unit(rng) * 100.0 - 50.0);
    encode_gtf(t, dir / "t.gtf");
    Tensor<float> back = decode_gtf(dir / "t.gtf");
    ASSERT_EQ(back.dims(), t.dims());
    ASSERT_EQ(0, std::memcmp(back.data(), t.data(), sizeof(float) * t.size()));
  }

  // flatten / reverse_map identity on masked grids.
  for (int iter = 0; iter < 10; ++iter) {
    const std::int64_t lat = 6, lon = 7;
    std::vector<float> grid(lat * lon, std::numeric_limits<float>::quiet_NaN());
    for (std::int64_t i = 0; i < lat * lon; ++i)
      if (rng_below(rng, 3) != 0) grid[static_cast<std::size_t>(i)] = static_cast<float>(rng_unit(rng));
    if (std::isnan(grid[0])) grid[0] = 0.5f;
    TargetGrid tg;
    tg.values = Tensor<float>::from_values({1, lat, lon, 1}, grid);
    tg.years = {2000};
    const ValidMask mask = build_valid_mask(tg);
    const auto vec = flatten_target(grid, lat, lon, mask);
    const Tensor<float> back = reverse_map(vec, mask);
    for (std::int64_t i = 0; i < lat * lon; ++i) {
      if (std::isnan(grid[static_cast<std::size_t>(i)]))
        ASSERT_TRUE(std::isnan(back.values()[i]));
      else
        ASSERT_EQ(back.values()[i], grid[static_cast<std::size_t>(i)]);
    }
    const auto vec2 =
        flatten_target(std::span<const float>(back.data(), back.size()), lat, lon, mask);
    ASSERT_EQ(vec, vec2);
  }

  // normalize / denormalize identity on train data. The map itself round
  // trips to 1e-6 in double; through float32 tensor storage the attainable
  // bound is range * 2^-22 (one rounding each way).
  Tensor<float> cube(Shape{40, 2});
  for (auto& v : cube.values()) v = static_cast<float>(rng_unit(rng) * 60.0);
  const NormParams norms = fit_minmax(cube, SplitRole::train);
  Tensor<float> normalized = apply_minmax(cube, norms, false, SplitRole::train);
  for (std::int64_t i = 0; i < cube.size(); ++i) {
    const std::int64_t c = i % 2;
    const double mn = norms.min_v[static_cast<std::size_t>(c)];
    const double mx = norms.max_v[static_cast<std::size_t>(c)];
    const double x = static_cast<double>(cube.values()[i]);
    // Double-precision algebra: y = (x - mn) / (mx - mn) inverted exactly.
    ASSERT_NEAR(denormalize_value((x - mn) / (mx - mn), mn, mx), x, 1e-6);
    // Float32 pipeline storage.
    const double back = denormalize_value(normalized.values()[i], mn, mx);
    ASSERT_NEAR(back, x, (mx - mn) * 0x1.0p-22);
  }
  fs::remove_all(dir);
  print_line(9, "GTF bit-exact incl. NaN; flatten/reverse identity; normalize/denormalize to 1e-6");
}

TEST(Acceptance, Criterion10_Reproducibility) {
  LearnabilityRun& first = learnability();
  // Second run of the identical configuration and seeds.
  const auto& ts = first.split.targets.at("jjas");
  TrainDataset data = make_train_dataset(first.split.train_predictors, ts.train, first.plan);
  TrainResult second = train(first.net, first.config, data);

  const fs::path dir = fs::temp_directory_path() / "gridcast_acceptance_c10";
  fs::remove_all(dir);
  save_checkpoint(first.net, first.result.state, dir / "a");
  save_checkpoint(first.net, second.state, dir / "b");
  auto ta = all_tensors(first.result.state);
  auto tb = all_tensors(second.state);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    ASSERT_EQ(ta[i].second.size(), tb[i].second.size());
    EXPECT_EQ(0, std::memcmp(ta[i].second.data(), tb[i].second.data(),
                             sizeof(float) * ta[i].second.size()))
        << ta[i].first;
  }
  // On-disk checkpoints byte-identical, file by file.
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    std::ifstream fa(entry.path(), std::ios::binary), fb(dir / "b" / rel, std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    EXPECT_EQ(ba, bb) << rel;
  }

  // Metrics identical, serialized form included.
  EvalSet set;
  set.predictors = &first.split.test_predictors;
  set.targets_norm = ts.test;
  MetricsReport again = evaluate(first.net, second.state, set, ts.norms);
  EXPECT_EQ(metrics_to_csv(again), metrics_to_csv(first.model_report));

  // Training histories identical, epoch by epoch.
  ASSERT_EQ(second.history.epoch_loss.size(), first.result.history.epoch_loss.size());
  for (std::size_t e = 0; e < second.history.epoch_loss.size(); ++e)
    EXPECT_EQ(second.history.epoch_loss[e], first.result.history.epoch_loss[e]);
  fs::remove_all(dir);
  print_line(10, "identical config and seeds -> bit-identical checkpoints and metrics");
}

}  // namespace
}  // namespace gridcast

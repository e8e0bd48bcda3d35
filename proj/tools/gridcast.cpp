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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridcast/augment.hpp"
#include "gridcast/checkpoint.hpp"
#include "gridcast/error.hpp"
#include "gridcast/grid.hpp"
#include "gridcast/gtf.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/pipeline.hpp"
#include "gridcast/preprocess.hpp"
#include "gridcast/render.hpp"
#include "gridcast/runmeta.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gridcast;

namespace {

json load_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " at " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  out << text;
}

// ---------------------------------------------------------------- gen-synth

struct GenSynthArgs {
  std::string out;
  SyntheticWorldSpec spec;
  std::vector<std::int64_t> signal_box;  // r,c,h,w
};

void add_gen_synth(CLI::App& app, GenSynthArgs& a) {
  CLI::App* cmd = app.add_subcommand("gen-synth",
                                     "Generate a synthetic climate world with a planted signal");
  cmd->add_option("--out", a.out, "Output dataset directory")->required();
  cmd->add_option("--years", a.spec.years, "Number of years");
  cmd->add_option("--first-year", a.spec.first_year, "First year label");
  cmd->add_option("--lat", a.spec.lat, "Predictor latitude cells");
  cmd->add_option("--lon", a.spec.lon, "Predictor longitude cells");
  cmd->add_option("--channels", a.spec.channels, "Predictor channels");
  cmd->add_flag("--daily", a.spec.daily, "Also emit raw daily fields");
  cmd->add_flag("--network-resolution", a.spec.network_resolution,
                "Grid is already at model resolution (no 3x3 downsampling)");
  cmd->add_option("--target-lat", a.spec.target_lat, "Target grid latitude cells");
  cmd->add_option("--target-lon", a.spec.target_lon, "Target grid longitude cells");
  cmd->add_option("--valid-density", a.spec.valid_density, "Fraction of valid target cells");
  cmd->add_option("--signal-channel", a.spec.signal_channel, "Channel carrying the signal");
  cmd->add_option("--signal-box", a.signal_box, "Signal region row,col,height,width")
      ->expected(4)
      ->delimiter(',');
  cmd->add_option("--signal-fortnights", a.spec.signal_fortnights,
                  "Fortnight indices feeding the signal")
      ->delimiter(',');
  cmd->add_option("--snr", a.spec.snr, "Signal-to-noise ratio; <= 0 disables noise");
  cmd->add_option("--sst-channel", a.spec.sst_channel, "SST channel index (-1 = auto)");
  cmd->add_option("--seed", a.spec.seed, "World seed");
  cmd->add_option("--targets", a.spec.target_names, "Target names to generate")->delimiter(',');
}

int run_gen_synth(GenSynthArgs& a, const std::string& resolved) {
  if (!a.signal_box.empty())
    a.spec.signal_box = {a.signal_box[0], a.signal_box[1], a.signal_box[2], a.signal_box[3]};
  SyntheticWorld world = gen_synthetic(a.spec);
  save_synthetic_world(world, a.spec, a.out);
  std::vector<std::string> outputs = {"predictors.gtf", "predictors.json", "truth.json",
                                      "dataset.json"};
  for (const auto& [name, grid] : world.targets) {
    outputs.push_back("target_" + name + ".gtf");
    outputs.push_back("target_" + name + ".json");
  }
  write_run_record(a.out, "gen-synth", resolved, {}, outputs);
  std::cout << "generated " << a.spec.years << " years into " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string data;
  std::string out;
  std::int64_t split_start = 1944;
  std::int64_t split_stride = 4;
  std::int64_t sst_channel = -2;  // -2: from dataset.json, -1: by name
};

void add_preprocess(CLI::App& app, PreprocessArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "preprocess", "Split, normalize, impute and downsample a raw dataset");
  cmd->add_option("--data", a.data, "Raw dataset directory (gen-synth output)")->required();
  cmd->add_option("--out", a.out, "Preprocessed output directory")->required();
  cmd->add_option("--split-start", a.split_start, "First test year");
  cmd->add_option("--split-stride", a.split_stride, "Test year stride");
  cmd->add_option("--sst-channel", a.sst_channel,
                  "SST channel index (-1: by channel name, default: dataset manifest)");
}

int run_preprocess(PreprocessArgs& a, const std::string& resolved) {
  const fs::path data_dir = a.data;
  const json ds = load_json_file(data_dir / "dataset.json", "dataset manifest");

  PredictorCube raw;
  std::vector<fs::path> inputs = {data_dir / "dataset.json"};
  if (ds.value("daily", false)) {
    const auto years = ds.at("years").get<std::vector<std::int64_t>>();
    std::vector<Tensor<float>> frames;
    for (const std::int64_t y : years) {
      const fs::path p = data_dir / ("daily_" + std::to_string(y) + ".gtf");
      inputs.push_back(p);
      Tensor<float> daily = decode_gtf(p);
      const bool leap = daily.dim(0) == 152;
      frames.push_back(fortnight_means(daily, leap));
    }
    const auto& d = frames.front().dims();
    raw.values =
        Tensor<float>(Shape{static_cast<std::int64_t>(years.size()), d[0], d[1], d[2], d[3]});
    for (std::size_t i = 0; i < frames.size(); ++i)
      std::copy_n(frames[i].data(), frames[i].size(),
                  raw.values.data() + static_cast<std::int64_t>(i) * frames[i].size());
    raw.years = years;
    for (std::int64_t c = 0; c < d[3]; ++c) raw.channel_names.push_back("ch" + std::to_string(c));
    if (ds.contains("sst_channel") && ds.at("sst_channel").get<std::int64_t>() >= 0)
      raw.channel_names[static_cast<std::size_t>(ds.at("sst_channel").get<std::int64_t>())] =
          "sst";
  } else {
    raw = load_predictor_cube(data_dir / "predictors");
    inputs.push_back(data_dir / "predictors.gtf");
  }

  std::map<std::string, TargetGrid> targets;
  for (const auto& name : ds.at("targets").get<std::vector<std::string>>()) {
    targets.emplace(name, load_target_grid(data_dir / ("target_" + name)));
    inputs.push_back(data_dir / ("target_" + name + ".gtf"));
  }

  PipelineOptions opts;
  opts.split = {a.split_start, a.split_stride};
  opts.downsample = ds.value("resolution", "raw") == "raw";
  opts.sst_channel =
      a.sst_channel == -2 ? ds.value("sst_channel", std::int64_t{-1}) : a.sst_channel;

  PreprocessedSplit split = preprocess_split(raw, targets, opts);
  save_preprocessed(split, a.out);
  write_run_record(a.out, "preprocess", resolved, inputs,
                   {"train_predictors.gtf", "test_predictors.gtf", "predictor_norms.json",
                    "mask.json", "split.json"});
  std::cout << "preprocessed " << split.train_predictors.n_years() << " train / "
            << split.test_predictors.n_years() << " test years into " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ augment

struct AugmentArgs {
  std::string data;
  std::string out;
  WindowSpec window;
  std::uint64_t seed = 0;
  std::string set = "train";
};

void add_augment(CLI::App& app, AugmentArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "augment", "Plan sliding-window inclusive/occlusive training augmentation");
  cmd->add_option("--data", a.data, "Preprocessed dataset directory")->required();
  cmd->add_option("--out", a.out, "Output directory for plan.json")->required();
  cmd->add_option("--window-h", a.window.window_h, "Window height");
  cmd->add_option("--window-w", a.window.window_w, "Window width");
  cmd->add_option("--stride-h", a.window.stride_h, "Row stride");
  cmd->add_option("--stride-w", a.window.stride_w, "Column stride");
  cmd->add_option("--fill", a.window.fill, "Fill value");
  cmd->add_option("--seed", a.seed, "Shuffle seed");
  cmd->add_option("--set", a.set, "Which split to augment (train only is legal)")
      ->check(CLI::IsMember({"train", "test"}));
}

int run_augment(AugmentArgs& a, const std::string& resolved) {
  const fs::path dir = a.data;
  const bool is_test = a.set == "test";
  const fs::path cube_json = dir / (is_test ? "test_predictors.json" : "train_predictors.json");
  const fs::path cube_gtf = dir / (is_test ? "test_predictors.gtf" : "train_predictors.gtf");
  const json manifest = load_json_file(cube_json, "predictor manifest");
  const auto years = manifest.at("years").get<std::vector<std::int64_t>>();
  const Shape dims = gtf_shape(cube_gtf);
  AugmentPlan plan = augment_dataset(years, dims[2], dims[3], a.window, a.seed,
                                     is_test ? SplitRole::test : SplitRole::train);
  fs::create_directories(a.out);
  save_augment_plan(plan, fs::path(a.out) / "plan.json");
  write_run_record(a.out, "augment", resolved, {cube_json, cube_gtf}, {"plan.json"});
  std::cout << "planned " << plan.entries.size() << " samples (" << years.size()
            << " years) into " << a.out << "/plan.json\n";
  return 0;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string plan;
  std::string out;
  TrainConfig config;
  std::int64_t blocks = 1;
  std::int64_t bottleneck = 64;
  double dropout = 0.3;
  double l2 = 1e-4;
  std::int64_t hidden = 512;
  bool no_augment = false;
  bool relu_before_add = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  CLI::App* cmd = app.add_subcommand("train", "Train one model configuration on one target");
  cmd->add_option("--data", a.data, "Preprocessed dataset directory")->required();
  cmd->add_option("--plan", a.plan, "Augmentation plan (plan.json); omit with --no-augment");
  cmd->add_option("--out", a.out, "Run directory")->required();
  cmd->add_option("--target", a.config.target, "Target name (june..september, jjas)")
      ->required();
  cmd->add_option("--blocks", a.blocks, "Residual blocks (1-4 in the experiment grid)");
  cmd->add_option("--bottleneck", a.bottleneck, "Bottleneck size (collapse channels)");
  cmd->add_option("--dropout", a.dropout, "Dropout rate");
  cmd->add_option("--l2", a.l2, "L2 coefficient");
  cmd->add_option("--hidden", a.hidden, "Hidden dense units");
  cmd->add_flag("--relu-before-add", a.relu_before_add,
                "Apply the block's final ReLU before the residual addition");
  cmd->add_option("--epochs", a.config.epochs, "Max epochs");
  cmd->add_option("--batch-size", a.config.batch_size, "Mini-batch size");
  cmd->add_option("--lr", a.config.learning_rate, "Adam learning rate");
  cmd->add_option("--patience", a.config.patience, "Early-stop patience (epochs)");
  cmd->add_option("--min-delta", a.config.min_delta, "Early-stop minimum improvement");
  cmd->add_option("--init-seed", a.config.init_seed, "Parameter init seed");
  cmd->add_option("--dropout-seed", a.config.dropout_seed, "Dropout mask seed");
  cmd->add_option("--max-steps", a.config.max_steps_per_epoch,
                  "Cap steps per epoch (0 = all; smoke runs)");
  cmd->add_flag("--no-augment", a.no_augment, "Train on original years only");
}

void require_target(const fs::path& data_dir, const std::string& target) {
  const auto names = preprocessed_target_names(data_dir);
  if (std::find(names.begin(), names.end(), target) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw UnknownTargetError("unknown target '" + target + "'; dataset provides: " + known);
  }
}

int run_train(TrainArgs& a, const std::string& resolved) {
  const fs::path data_dir = a.data;
  require_target(data_dir, a.config.target);
  PreprocessedSplit split = load_preprocessed(data_dir);
  const auto& ts = split.targets.at(a.config.target);

  NetworkSpec spec;
  spec.num_blocks = a.blocks;
  spec.bottleneck = a.bottleneck;
  spec.dropout_rate = a.dropout;
  spec.l2_coeff = a.l2;
  spec.hidden_units = a.hidden;
  spec.relu_before_add = a.relu_before_add;
  spec.output_units = split.mask.count();
  spec.input = {split.train_predictors.fortnights(), split.train_predictors.lat(),
                split.train_predictors.lon(), split.train_predictors.channels()};

  TrainDataset dataset;
  std::vector<fs::path> inputs = {data_dir / "train_predictors.gtf"};
  if (a.no_augment) {
    dataset = make_plain_dataset(split.train_predictors, ts.train);
  } else {
    if (a.plan.empty())
      throw ConfigError("train: --plan is required unless --no-augment is set");
    AugmentPlan plan = load_augment_plan(a.plan);
    a.config.shuffle_seed = plan.shuffle_seed;
    dataset = make_train_dataset(split.train_predictors, ts.train, plan);
    inputs.push_back(a.plan);
  }

  TrainResult result = train(spec, a.config, dataset);
  fs::create_directories(a.out);
  save_checkpoint(spec, result.state, fs::path(a.out) / "checkpoint");

  std::string history_csv = "epoch,loss\n";
  for (std::size_t e = 0; e < result.history.epoch_loss.size(); ++e)
    history_csv += std::to_string(e) + "," + std::to_string(result.history.epoch_loss[e]) + "\n";
  write_text(fs::path(a.out) / "history.csv", history_csv);
  json hist;
  hist["reason"] = stop_reason_name(result.history.reason);
  hist["best_epoch"] = result.history.best_epoch;
  hist["best_loss"] = result.history.best_loss;
  hist["epochs_run"] = result.history.epoch_loss.size();
  hist["target"] = a.config.target;
  hist["blocks"] = a.blocks;
  hist["bottleneck"] = a.bottleneck;
  write_text(fs::path(a.out) / "history.json", hist.dump(2) + "\n");
  write_run_record(a.out, "train", resolved, inputs,
                   {"checkpoint", "history.csv", "history.json"});
  std::cout << "trained " << result.history.epoch_loss.size() << " epochs (best "
            << result.history.best_loss << " at epoch " << result.history.best_epoch << ", "
            << stop_reason_name(result.history.reason) << ") -> " << a.out << "\n";
  if (result.history.reason == StopReason::nan_abort)
    throw TrainingError("training aborted on NaN loss; best checkpoint preserved in " + a.out);
  return 0;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string target;
  std::string norms;  // optional override
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "evaluate", "Score a checkpoint on the held-out test years (plus climatology baseline)");
  cmd->add_option("--data", a.data, "Preprocessed dataset directory")->required();
  cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint directory")->required();
  cmd->add_option("--target", a.target, "Target name")->required();
  cmd->add_option("--out", a.out, "Run directory")->required();
  cmd->add_option("--norms", a.norms, "Override target normalization parameters (JSON)");
}

int run_evaluate(EvaluateArgs& a, const std::string& resolved) {
  const fs::path data_dir = a.data;
  require_target(data_dir, a.target);
  PreprocessedSplit split = load_preprocessed(data_dir);
  const auto& ts = split.targets.at(a.target);
  const NormParams norms = a.norms.empty() ? ts.norms : load_norm_params(a.norms);
  if (norms.channels() != 1)
    throw MissingNormParamsError("target normalization parameters must have one channel");

  LoadedCheckpoint ckpt = load_checkpoint(a.checkpoint);
  EvalSet set;
  set.predictors = &split.test_predictors;
  set.targets_norm = ts.test;
  MetricsReport model = evaluate(ckpt.spec, ckpt.state, set, norms);

  std::vector<std::vector<double>> train_targets;
  for (const auto& row : ts.train) train_targets.emplace_back(row.begin(), row.end());
  MetricsReport baseline = evaluate_constant(climatology_baseline(train_targets), set, norms);

  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "metrics.csv", metrics_to_csv(model));
  write_text(fs::path(a.out) / "metrics.json", metrics_to_json(model) + "\n");
  write_text(fs::path(a.out) / "baseline_metrics.csv", metrics_to_csv(baseline));
  write_text(fs::path(a.out) / "baseline_metrics.json", metrics_to_json(baseline) + "\n");

  json summary;
  summary["target"] = a.target;
  summary["blocks"] = ckpt.spec.num_blocks;
  summary["bottleneck"] = ckpt.spec.bottleneck;
  summary["metrics"] = {{"mse", model.mse},
                        {"mae", model.mae},
                        {"snmae", model.snmae},
                        {"mae_mm_per_day", model.mae_phys}};
  summary["baseline"] = {{"mse", baseline.mse}, {"mae", baseline.mae}, {"snmae", baseline.snmae}};
  write_text(fs::path(a.out) / "eval_summary.json", summary.dump(2) + "\n");
  write_run_record(a.out, "evaluate", resolved,
                   {fs::path(a.checkpoint) / "manifest.json", data_dir / "test_predictors.gtf"},
                   {"metrics.csv", "metrics.json", "baseline_metrics.csv",
                    "baseline_metrics.json", "eval_summary.json"});
  std::cout << "test mse " << model.mse << " mae " << model.mae << " snmae " << model.snmae
            << " (baseline mse " << baseline.mse << ") -> " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ predict

struct PredictArgs {
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string target;
  std::string set = "test";
  bool grids = false;
};

void add_predict(CLI::App& app, PredictArgs& a) {
  CLI::App* cmd =
      app.add_subcommand("predict", "Emit normalized and mm/day prediction vectors");
  cmd->add_option("--data", a.data, "Preprocessed dataset directory")->required();
  cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint directory")->required();
  cmd->add_option("--target", a.target, "Target name")->required();
  cmd->add_option("--out", a.out, "Run directory")->required();
  cmd->add_option("--set", a.set, "Which split to predict")
      ->check(CLI::IsMember({"train", "test"}));
  cmd->add_flag("--grids", a.grids, "Also write reverse-mapped 2D grids as GTF");
}

std::string vectors_csv(const std::vector<std::int64_t>& years,
                        const std::vector<std::vector<double>>& rows) {
  std::string csv = "year";
  if (!rows.empty())
    for (std::size_t i = 0; i < rows[0].size(); ++i) csv += ",cell" + std::to_string(i);
  csv += "\n";
  char buf[32];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    csv += std::to_string(years[r]);
    for (const double v : rows[r]) {
      std::snprintf(buf, sizeof buf, ",%.7g", v);
      csv += buf;
    }
    csv += "\n";
  }
  return csv;
}

int run_predict(PredictArgs& a, const std::string& resolved) {
  const fs::path data_dir = a.data;
  require_target(data_dir, a.target);
  PreprocessedSplit split = load_preprocessed(data_dir);
  const auto& ts = split.targets.at(a.target);
  const PredictorCube& cube = a.set == "train" ? split.train_predictors : split.test_predictors;

  LoadedCheckpoint ckpt = load_checkpoint(a.checkpoint);
  Predictions preds = predict(ckpt.spec, ckpt.state, cube, ts.norms);

  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "predictions_norm.csv",
             vectors_csv(preds.years, preds.normalized));
  write_text(fs::path(a.out) / "predictions_mm.csv", vectors_csv(preds.years, preds.physical));
  std::vector<std::string> outputs = {"predictions_norm.csv", "predictions_mm.csv"};
  if (a.grids) {
    for (std::size_t i = 0; i < preds.years.size(); ++i) {
      std::vector<float> mm(preds.physical[i].begin(), preds.physical[i].end());
      Tensor<float> grid = reverse_map(mm, split.mask);
      const std::string name = "pred_" + std::to_string(preds.years[i]) + ".gtf";
      encode_gtf(grid, fs::path(a.out) / name);
      outputs.push_back(name);
    }
  }
  write_run_record(a.out, "predict", resolved, {fs::path(a.checkpoint) / "manifest.json"},
                   outputs);
  std::cout << "predicted " << preds.years.size() << " years -> " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- render-map

struct RenderArgs {
  std::string truth;
  std::string pred;
  std::string out;
  std::string name = "map";
  std::int64_t year = -1;
  std::int64_t cell_px = 8;
};

void add_render(CLI::App& app, RenderArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "render-map", "Render truth/prediction grids side by side as a portable pixmap");
  cmd->add_option("--truth", a.truth, "Truth grid GTF (rank 2, or rank 4 with --year)")
      ->required();
  cmd->add_option("--pred", a.pred, "Prediction grid GTF (rank 2, or rank 4 with --year)")
      ->required();
  cmd->add_option("--out", a.out, "Run directory")->required();
  cmd->add_option("--name", a.name, "Output base name");
  cmd->add_option("--year", a.year, "Year label to slice from rank-4 target files");
  cmd->add_option("--cell-px", a.cell_px, "Pixels per grid cell");
}

Tensor<float> load_grid2d(const fs::path& path, std::int64_t year) {
  Tensor<float> t = decode_gtf(path);
  if (t.rank() == 2) return t;
  if (t.rank() == 4 && t.dim(3) == 1) {
    // (years, lat, lon, 1): slice by year label from the sidecar manifest.
    std::vector<std::int64_t> years;
    const fs::path manifest = path.parent_path() / (path.stem().string() + ".json");
    if (fs::exists(manifest))
      years = load_json_file(manifest, "target manifest")
                  .at("years")
                  .get<std::vector<std::int64_t>>();
    std::int64_t index = -1;
    if (!years.empty()) {
      for (std::size_t i = 0; i < years.size(); ++i)
        if (years[i] == year) index = static_cast<std::int64_t>(i);
    } else if (year >= 0 && year < t.dim(0)) {
      index = year;  // plain index when no manifest
    }
    if (index < 0)
      throw DataError("year " + std::to_string(year) + " not present in " + path.string());
    Tensor<float> slice(Shape{t.dim(1), t.dim(2)});
    std::copy_n(t.data() + index * slice.size(), slice.size(), slice.data());
    return slice;
  }
  throw ShapeError("render: expected a rank-2 grid or rank-4 target file, got " +
                   shape_str(t.dims()));
}

int run_render(RenderArgs& a, const std::string& resolved) {
  Tensor<float> truth = load_grid2d(a.truth, a.year);
  Tensor<float> pred = load_grid2d(a.pred, a.year);
  fs::create_directories(a.out);
  RenderOptions opt;
  opt.cell_px = a.cell_px;
  render_map(truth, pred, fs::path(a.out) / a.name, opt);
  write_run_record(a.out, "render-map", resolved, {a.truth, a.pred},
                   {a.name + ".ppm", a.name + "_scale.txt"});
  std::cout << "rendered " << a.name << ".ppm in " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
};

void add_report(CLI::App& app, ReportArgs& a) {
  CLI::App* cmd =
      app.add_subcommand("report", "Aggregate evaluation runs into the experiment-grid CSV");
  cmd->add_option("--runs", a.runs, "Evaluation run directories")->required()->expected(-1);
  cmd->add_option("--out", a.out, "Run directory")->required();
}

int run_report(ReportArgs& a, const std::string& resolved) {
  // cells[bottleneck][target][metric][blocks] = value
  std::map<std::int64_t,
           std::map<std::string, std::map<std::string, std::map<std::int64_t, double>>>>
      cells;
  std::vector<fs::path> inputs;
  for (const auto& run : a.runs) {
    const fs::path p = fs::path(run) / "eval_summary.json";
    const json s = load_json_file(p, "evaluation summary");
    inputs.push_back(p);
    const auto bottleneck = s.at("bottleneck").get<std::int64_t>();
    const auto blocks = s.at("blocks").get<std::int64_t>();
    const auto target = s.at("target").get<std::string>();
    cells[bottleneck][target]["MSE"][blocks] = s.at("metrics").at("mse").get<double>();
    cells[bottleneck][target]["MAE"][blocks] = s.at("metrics").at("mae").get<double>();
    cells[bottleneck][target]["snMAE"][blocks] = s.at("metrics").at("snmae").get<double>();
  }

  std::string csv = "bottleneck,target,metric,1_block,2_blocks,3_blocks,4_blocks\n";
  char buf[32];
  for (const auto& [bottleneck, by_target] : cells) {
    // Canonical target order first, then anything else alphabetically.
    std::vector<std::string> order;
    for (const auto& name : kCanonicalTargets)
      if (by_target.count(name)) order.push_back(name);
    for (const auto& [name, unused] : by_target)
      if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    for (const auto& name : order) {
      for (const char* metric : {"MSE", "MAE", "snMAE"}) {
        csv += std::to_string(bottleneck) + "," + name + "," + metric;
        const auto& by_blocks = by_target.at(name).at(metric);
        for (std::int64_t b = 1; b <= 4; ++b) {
          csv += ",";
          const auto bit = by_blocks.find(b);
          if (bit != by_blocks.end()) {
            std::snprintf(buf, sizeof buf, "%.5f", bit->second);
            csv += buf;
          }
        }
        csv += "\n";
      }
    }
  }
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "report.csv", csv);
  write_run_record(a.out, "report", resolved, inputs, {"report.csv"});
  std::cout << "report over " << a.runs.size() << " runs -> " << a.out << "/report.csv\n";
  return 0;
}

// ------------------------------------------------------------------- driver

// Flat JSON config support: tokens derived from the file are injected right
// after the subcommand so explicit command-line flags win.
std::vector<std::string> inject_config(const std::vector<std::string>& args) {
  std::string config_path;
  std::vector<std::string> out;
  std::size_t sub_end = 0;  // position just after the subcommand token
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config requires a file path");
      config_path = args[i + 1];
      ++i;
      continue;
    }
    out.push_back(args[i]);
    if (sub_end == 0 && !args[i].empty() && args[i][0] != '-') sub_end = out.size();
  }
  if (config_path.empty()) return out;
  if (sub_end == 0) throw ConfigError("--config requires a subcommand");
  const json cfg = load_json_file(config_path, "config file");
  if (!cfg.is_object()) throw ConfigError("config file must hold a flat JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back("--" + key);
      continue;
    }
    tokens.push_back("--" + key);
    if (value.is_string()) {
      tokens.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value)
        joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      tokens.push_back(joined);
    } else {
      tokens.push_back(value.dump());
    }
  }
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(sub_end), tokens.begin(), tokens.end());
  return out;
}

// The resolved configuration recorded into run.json.
std::string resolved_config(const CLI::App* sub) {
  json j;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help") continue;
    const auto results = opt->reduced_results();
    if (!results.empty())
      j[name] = results.size() == 1 ? json(results[0]) : json(results);
    else
      j[name] = opt->get_default_str();
  }
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridcast: sequence-to-frame gridded monsoon forecasting pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for all subcommands");
  // Config-file tokens are injected before explicit flags; last value wins.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenSynthArgs gen_args;
  PreprocessArgs pre_args;
  AugmentArgs aug_args;
  TrainArgs train_args;
  EvaluateArgs eval_args;
  PredictArgs pred_args;
  RenderArgs render_args;
  ReportArgs report_args;
  add_gen_synth(app, gen_args);
  add_preprocess(app, pre_args);
  add_augment(app, aug_args);
  add_train(app, train_args);
  add_evaluate(app, eval_args);
  add_predict(app, pred_args);
  add_render(app, render_args);
  add_report(app, report_args);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = inject_config(args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());  // CLI11 order
    app.parse(reversed);

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const std::string resolved = resolved_config(sub);
    if (name == "gen-synth") return run_gen_synth(gen_args, resolved);
    if (name == "preprocess") return run_preprocess(pre_args, resolved);
    if (name == "augment") return run_augment(aug_args, resolved);
    if (name == "train") return run_train(train_args, resolved);
    if (name == "evaluate") return run_evaluate(eval_args, resolved);
    if (name == "predict") return run_predict(pred_args, resolved);
    if (name == "render-map") return run_render(render_args, resolved);
    if (name == "report") return run_report(report_args, resolved);
    throw ConfigError("unhandled subcommand " + name);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    json record;
    record["error"] = {{"type", "cli_usage"}, {"message", e.what()}, {"exit_code", 2}};
    std::cerr << record.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    json record;
    record["error"] = {{"type", e.kind()},
                       {"message", e.what()},
                       {"exit_code", static_cast<int>(e.exit_code())}};
    std::cerr << record.dump() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    json record;
    record["error"] = {{"type", "internal"}, {"message", e.what()}, {"exit_code", 1}};
    std::cerr << record.dump() << "\n";
    return 1;
  }
}

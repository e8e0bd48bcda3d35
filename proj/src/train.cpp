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

#include "gridcast/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridcast/adam.hpp"

namespace gridcast {

std::string stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::completed: return "completed";
    case StopReason::early_stop: return "early_stop";
    case StopReason::nan_abort: return "nan_abort";
  }
  return "unknown";
}

namespace {

Tensor<float> year_slice(const PredictorCube& cube, std::int64_t year_index) {
  const std::int64_t slab = cube.fortnights() * cube.lat() * cube.lon() * cube.channels();
  Tensor<float> out(Shape{cube.fortnights(), cube.lat(), cube.lon(), cube.channels()});
  std::copy_n(cube.values.data() + year_index * slab, slab, out.data());
  return out;
}

// Deep copy of all model tensors, for best-epoch snapshots.
std::vector<std::vector<float>> snapshot_tensors(NetworkState<float>& state) {
  std::vector<std::vector<float>> snap;
  for (auto& [name, t] : all_tensors(state))
    snap.emplace_back(t.values().begin(), t.values().end());
  return snap;
}

void restore_tensors(NetworkState<float>& state, const std::vector<std::vector<float>>& snap) {
  auto tensors = all_tensors(state);
  for (std::size_t i = 0; i < tensors.size(); ++i)
    std::copy(snap[i].begin(), snap[i].end(), tensors[i].second.data());
}

std::vector<std::vector<double>> to_double(const std::vector<std::vector<float>>& v) {
  std::vector<std::vector<double>> out;
  out.reserve(v.size());
  for (const auto& row : v) out.emplace_back(row.begin(), row.end());
  return out;
}

void check_eval_protocol(const EvalSet& set) {
  for (std::size_t i = 0; i < set.variants.size(); ++i)
    if (set.variants[i] != Variant::original)
      throw ProtocolError("augmented sample (index " + std::to_string(i) + ", variant '" +
                          variant_name(set.variants[i]) +
                          "') in a test set; evaluation uses original years only");
}

}  // namespace

TrainDataset make_train_dataset(const PredictorCube& train_cube,
                                const std::vector<std::vector<float>>& train_targets_norm,
                                const AugmentPlan& plan) {
  if (train_targets_norm.size() != static_cast<std::size_t>(train_cube.n_years()))
    throw ShapeError("train dataset: target rows (" + std::to_string(train_targets_norm.size()) +
                     ") vs cube years (" + std::to_string(train_cube.n_years()) + ")");
  if (plan.grid_h != train_cube.lat() || plan.grid_w != train_cube.lon())
    throw ConfigError("train dataset: augmentation plan grid (" + std::to_string(plan.grid_h) +
                      "," + std::to_string(plan.grid_w) + ") vs cube grid (" +
                      std::to_string(train_cube.lat()) + "," + std::to_string(train_cube.lon()) +
                      ")");
  TrainDataset data;
  data.count = static_cast<std::int64_t>(plan.entries.size());
  data.target_len =
      train_targets_norm.empty() ? 0 : static_cast<std::int64_t>(train_targets_norm[0].size());
  // Copies of the handles keep the cube alive inside the closures.
  auto cube = train_cube;
  auto targets = train_targets_norm;
  auto entries = plan.entries;
  auto window = plan.window;
  data.sample = [cube, entries, window](std::int64_t i) {
    const AugmentEntry& e = entries[static_cast<std::size_t>(i)];
    return materialize(e, year_slice(cube, e.year_index), window);
  };
  data.target = [targets, entries](std::int64_t i) -> std::span<const float> {
    const AugmentEntry& e = entries[static_cast<std::size_t>(i)];
    return targets[static_cast<std::size_t>(e.year_index)];
  };
  return data;
}

TrainDataset make_plain_dataset(const PredictorCube& cube,
                                const std::vector<std::vector<float>>& targets_norm) {
  if (targets_norm.size() != static_cast<std::size_t>(cube.n_years()))
    throw ShapeError("dataset: target rows vs cube years mismatch");
  TrainDataset data;
  data.count = cube.n_years();
  data.target_len = targets_norm.empty() ? 0 : static_cast<std::int64_t>(targets_norm[0].size());
  auto cube_copy = cube;
  auto targets = targets_norm;
  data.sample = [cube_copy](std::int64_t i) { return year_slice(cube_copy, i); };
  data.target = [targets](std::int64_t i) -> std::span<const float> {
    return targets[static_cast<std::size_t>(i)];
  };
  return data;
}

TrainResult train(const NetworkSpec& spec, const TrainConfig& config, const TrainDataset& data) {
  spec.validate();
  config.validate();
  if (data.count == 0) throw ConfigError("train: empty training set");
  if (data.target_len != spec.output_units)
    throw ShapeError("train: target length " + std::to_string(data.target_len) +
                     " vs network output units " + std::to_string(spec.output_units));

  TrainResult result;
  result.state = init_params<float>(spec, config.init_seed);
  auto params = trainable_params(result.state);
  AdamState<float> adam(params, {.lr = config.learning_rate});

  // L2 applies to conv kernels and dense weights, not biases or batch-norm.
  std::vector<L2Term<float>> l2_terms;
  if (spec.l2_coeff > 0.0)
    for (auto& [name, p] : params)
      if (name.ends_with("kernel") || name.ends_with("weight"))
        l2_terms.push_back({spec.l2_coeff, p});

  const std::int64_t in_t = spec.input.fortnights, in_h = spec.input.lat, in_w = spec.input.lon,
                     in_c = spec.input.channels;
  const std::int64_t sample_size = in_t * in_h * in_w * in_c;

  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::vector<float>> best_snapshot = snapshot_tensors(result.state);
  std::int64_t best_step_count = 0;
  std::int64_t wait = 0;
  auto& history = result.history;
  history.reason = StopReason::completed;

  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::int64_t loss_n = 0;
    bool nan_hit = false;
    std::int64_t steps = 0;
    for (std::int64_t start = 0; start < data.count; start += config.batch_size) {
      if (config.max_steps_per_epoch > 0 && steps >= config.max_steps_per_epoch) break;
      const std::int64_t bsz = std::min(config.batch_size, data.count - start);
      Tensor<float> batch(Shape{bsz, in_t, in_h, in_w, in_c});
      Tensor<float> targets(Shape{bsz, spec.output_units});
      for (std::int64_t b = 0; b < bsz; ++b) {
        Tensor<float> s = data.sample(start + b);
        if (s.size() != sample_size)
          throw ShapeError("train: sample " + std::to_string(start + b) + " has shape " +
                           shape_str(s.dims()));
        std::copy_n(s.data(), sample_size, batch.data() + b * sample_size);
        auto t = data.target(start + b);
        std::copy(t.begin(), t.end(), targets.data() + b * spec.output_units);
      }
      batch.set_requires_grad(false);

      adam.zero_grad();
      GradTape<float> tape;
      const std::uint64_t step_seed =
          derive_seed(config.dropout_seed,
                      "epoch" + std::to_string(epoch) + "/step" + std::to_string(steps));
      Tensor<float> pred =
          forward(spec, result.state, batch, Mode::train, &tape, step_seed);
      Tensor<float> loss = mse_loss(pred, targets, l2_terms, &tape);
      const double loss_value = static_cast<double>(loss.scalar());
      if (!std::isfinite(loss_value)) {
        nan_hit = true;
        break;
      }
      tape.backward(loss);
      adam.step();
      loss_sum += loss_value * static_cast<double>(bsz);
      loss_n += bsz;
      ++steps;
    }
    if (nan_hit) {
      history.reason = StopReason::nan_abort;
      break;
    }
    const double epoch_loss = loss_sum / static_cast<double>(loss_n);
    history.epoch_loss.push_back(epoch_loss);
    if (epoch_loss < best_loss - config.min_delta) {
      best_loss = epoch_loss;
      history.best_epoch = epoch;
      best_snapshot = snapshot_tensors(result.state);
      best_step_count = adam.step_count();
      wait = 0;
    } else {
      ++wait;
      if (wait > config.patience) {
        history.reason = StopReason::early_stop;
        break;
      }
    }
  }

  restore_tensors(result.state, best_snapshot);
  result.state.step_count = best_step_count;
  history.best_loss = best_loss;
  return result;
}

Predictions predict(const NetworkSpec& spec, NetworkState<float>& state,
                    const PredictorCube& predictors, const NormParams& target_norms) {
  if (target_norms.channels() != 1)
    throw ConfigError("predict: target normalization parameters must have exactly one channel");
  const double mn = target_norms.min_v[0];
  const double mx = target_norms.max_v[0];

  Predictions out;
  out.years = predictors.years;
  const std::int64_t n = predictors.n_years();
  const std::int64_t slab =
      predictors.fortnights() * predictors.lat() * predictors.lon() * predictors.channels();
  constexpr std::int64_t kChunk = 8;
  for (std::int64_t start = 0; start < n; start += kChunk) {
    const std::int64_t bsz = std::min(kChunk, n - start);
    Tensor<float> batch(Shape{bsz, predictors.fortnights(), predictors.lat(), predictors.lon(),
                              predictors.channels()});
    std::copy_n(predictors.values.data() + start * slab, bsz * slab, batch.data());
    Tensor<float> pred = forward(spec, state, batch, Mode::infer);
    for (std::int64_t b = 0; b < bsz; ++b) {
      std::vector<double> norm(static_cast<std::size_t>(spec.output_units));
      std::vector<double> phys(static_cast<std::size_t>(spec.output_units));
      for (std::int64_t i = 0; i < spec.output_units; ++i) {
        norm[static_cast<std::size_t>(i)] =
            static_cast<double>(pred.values()[b * spec.output_units + i]);
        phys[static_cast<std::size_t>(i)] =
            denormalize_value(norm[static_cast<std::size_t>(i)], mn, mx);
      }
      out.normalized.push_back(std::move(norm));
      out.physical.push_back(std::move(phys));
    }
  }
  return out;
}

MetricsReport evaluate(const NetworkSpec& spec, NetworkState<float>& state, const EvalSet& set,
                       const NormParams& target_norms) {
  if (set.predictors == nullptr) throw ConfigError("evaluate: no predictors");
  check_eval_protocol(set);
  if (set.targets_norm.size() != static_cast<std::size_t>(set.predictors->n_years()))
    throw ShapeError("evaluate: target rows vs predictor years mismatch");

  Predictions preds = predict(spec, state, *set.predictors, target_norms);
  const double scale = target_norms.max_v[0] - target_norms.min_v[0];
  return score_predictions(set.predictors->years, preds.normalized, to_double(set.targets_norm),
                           scale);
}

MetricsReport evaluate_constant(const std::vector<double>& prediction, const EvalSet& set,
                                const NormParams& target_norms) {
  if (set.predictors == nullptr) throw ConfigError("evaluate: no predictors");
  check_eval_protocol(set);
  std::vector<std::vector<double>> preds(set.targets_norm.size(), prediction);
  const double scale = target_norms.max_v[0] - target_norms.min_v[0];
  return score_predictions(set.predictors->years, preds, to_double(set.targets_norm), scale);
}

}  // namespace gridcast

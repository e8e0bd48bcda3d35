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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gridcast/augment.hpp"
#include "gridcast/grid.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/network.hpp"
#include "gridcast/preprocess.hpp"

namespace gridcast {

inline const std::vector<std::string> kCanonicalTargets = {"june", "july", "august",
                                                           "september", "jjas"};

struct TrainConfig {
  std::string target = "jjas";
  std::int64_t epochs = 100;
  std::int64_t batch_size = 8;
  double learning_rate = 1e-3;
  std::int64_t patience = 10;
  double min_delta = 1e-5;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t dropout_seed = 2;
  std::int64_t max_steps_per_epoch = 0;  // 0 = no cap; debug/smoke knob

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (min_delta < 0) throw ConfigError("train: min_delta must be >= 0");
  }
};

enum class StopReason { completed, early_stop, nan_abort };

std::string stop_reason_name(StopReason reason);

struct TrainHistory {
  std::vector<double> epoch_loss;
  std::int64_t best_epoch = -1;  // 0-based
  double best_loss = 0.0;
  StopReason reason = StopReason::completed;
};

// Lazily materialized training samples: predictor tensors plus the
// normalized target vector each sample shares with its source year.
struct TrainDataset {
  std::int64_t count = 0;
  std::int64_t target_len = 0;
  std::function<Tensor<float>(std::int64_t)> sample;
  std::function<std::span<const float>(std::int64_t)> target;
};

// Dataset view over a preprocessed train cube and an augmentation plan.
TrainDataset make_train_dataset(const PredictorCube& train_cube,
                                const std::vector<std::vector<float>>& train_targets_norm,
                                const AugmentPlan& plan);

// Un-augmented dataset of original years only (for baselines/smoke runs).
TrainDataset make_plain_dataset(const PredictorCube& cube,
                                const std::vector<std::vector<float>>& targets_norm);

struct TrainResult {
  NetworkState<float> state;
  TrainHistory history;
};

// Mini-batch Adam over MSE + L2 with early stopping on the epoch-mean
// training loss; the best epoch's parameters are restored on exit. A NaN
// batch loss aborts the run and restores the last-good snapshot.
TrainResult train(const NetworkSpec& spec, const TrainConfig& config, const TrainDataset& data);

struct Predictions {
  std::vector<std::int64_t> years;
  std::vector<std::vector<double>> normalized;  // sigmoid outputs per year
  std::vector<std::vector<double>> physical;    // denormalized, mm/day
};

// Inference over every year of a preprocessed cube; physical values follow
// value * (max - min) + min from the target normalization parameters.
Predictions predict(const NetworkSpec& spec, NetworkState<float>& state,
                    const PredictorCube& predictors, const NormParams& target_norms);

// A test set ready for evaluation; variants, when present, must all be
// `original` (augmented samples violate the evaluation protocol).
struct EvalSet {
  const PredictorCube* predictors = nullptr;
  std::vector<std::vector<float>> targets_norm;
  std::vector<Variant> variants;  // empty means all original
};

MetricsReport evaluate(const NetworkSpec& spec, NetworkState<float>& state, const EvalSet& set,
                       const NormParams& target_norms);

// Score a constant prediction (e.g. the climatology baseline) against the
// same test targets, with the same per-sample-then-average protocol.
MetricsReport evaluate_constant(const std::vector<double>& prediction, const EvalSet& set,
                                const NormParams& target_norms);

}  // namespace gridcast

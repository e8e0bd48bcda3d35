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
#include <span>
#include <string>
#include <vector>

namespace gridcast {

inline constexpr double kSnmaeEps = 1e-8;

// Per-sample metrics over the valid grid cells.
double metric_mse(std::span<const double> y, std::span<const double> yhat);
double metric_mae(std::span<const double> y, std::span<const double> yhat);
// MAE normalized by the sample's mean target: MAE / (mean(y) + eps).
double metric_snmae(std::span<const double> y, std::span<const double> yhat,
                    double eps = kSnmaeEps);

struct SampleMetrics {
  std::int64_t year = 0;
  double mse = 0.0;
  double mae = 0.0;
  double snmae = 0.0;
  double mae_phys = 0.0;  // mm/day via MAE_norm * (max - min)
};

// Metrics are computed per sample, then averaged arithmetically.
struct MetricsReport {
  std::vector<SampleMetrics> per_sample;
  double mse = 0.0;
  double mae = 0.0;
  double snmae = 0.0;
  double mae_phys = 0.0;
};

// Score per-year normalized predictions against normalized targets;
// phys_scale is (y_max - y_min) of the target's normalization parameters.
MetricsReport score_predictions(const std::vector<std::int64_t>& years,
                                const std::vector<std::vector<double>>& predictions,
                                const std::vector<std::vector<double>>& targets,
                                double phys_scale);

// Per-cell mean of the training targets; the trivial forecast to beat.
std::vector<double> climatology_baseline(const std::vector<std::vector<double>>& train_targets);

std::string metrics_to_csv(const MetricsReport& report);
std::string metrics_to_json(const MetricsReport& report);

}  // namespace gridcast

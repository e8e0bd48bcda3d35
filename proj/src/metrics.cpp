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

#include "gridcast/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "gridcast/error.hpp"

namespace gridcast {

using nlohmann::json;

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size())
    throw ShapeError("metric: vector lengths differ (" + std::to_string(y.size()) + " vs " +
                     std::to_string(yhat.size()) + ")");
  if (y.empty()) throw DataError("metric: empty vectors");
}

}  // namespace

double metric_mse(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    acc += d * d;
  }
  return acc / static_cast<double>(y.size());
}

double metric_mae(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::fabs(y[i] - yhat[i]);
  return acc / static_cast<double>(y.size());
}

double metric_snmae(std::span<const double> y, std::span<const double> yhat, double eps) {
  const double mae = metric_mae(y, yhat);
  double mean = 0.0;
  for (const double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  return mae / (mean + eps);
}

MetricsReport score_predictions(const std::vector<std::int64_t>& years,
                                const std::vector<std::vector<double>>& predictions,
                                const std::vector<std::vector<double>>& targets,
                                double phys_scale) {
  if (predictions.size() != targets.size() || predictions.size() != years.size())
    throw ShapeError("score_predictions: years/predictions/targets counts differ");
  if (predictions.empty()) throw DataError("score_predictions: no samples");

  MetricsReport report;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    SampleMetrics s;
    s.year = years[i];
    s.mse = metric_mse(targets[i], predictions[i]);
    s.mae = metric_mae(targets[i], predictions[i]);
    s.snmae = metric_snmae(targets[i], predictions[i]);
    s.mae_phys = s.mae * phys_scale;
    report.per_sample.push_back(s);
  }
  const double n = static_cast<double>(report.per_sample.size());
  for (const auto& s : report.per_sample) {
    report.mse += s.mse / n;
    report.mae += s.mae / n;
    report.snmae += s.snmae / n;
    report.mae_phys += s.mae_phys / n;
  }
  return report;
}

std::vector<double> climatology_baseline(const std::vector<std::vector<double>>& train_targets) {
  if (train_targets.empty()) throw DataError("climatology_baseline: no training targets");
  const std::size_t n = train_targets.front().size();
  std::vector<double> mean(n, 0.0);
  for (const auto& t : train_targets) {
    if (t.size() != n) throw ShapeError("climatology_baseline: ragged target vectors");
    for (std::size_t i = 0; i < n; ++i) mean[i] += t[i];
  }
  for (auto& v : mean) v /= static_cast<double>(train_targets.size());
  return mean;
}

std::string metrics_to_csv(const MetricsReport& report) {
  std::string out = "year,mse,mae,snmae,mae_mm_per_day\n";
  char line[160];
  for (const auto& s : report.per_sample) {
    std::snprintf(line, sizeof line, "%lld,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(s.year), s.mse, s.mae, s.snmae, s.mae_phys);
    out += line;
  }
  std::snprintf(line, sizeof line, "aggregate,%.10g,%.10g,%.10g,%.10g\n", report.mse, report.mae,
                report.snmae, report.mae_phys);
  out += line;
  return out;
}

std::string metrics_to_json(const MetricsReport& report) {
  json j;
  j["aggregate"] = {{"mse", report.mse},
                    {"mae", report.mae},
                    {"snmae", report.snmae},
                    {"mae_mm_per_day", report.mae_phys}};
  json per = json::array();
  for (const auto& s : report.per_sample)
    per.push_back({{"year", s.year},
                   {"mse", s.mse},
                   {"mae", s.mae},
                   {"snmae", s.snmae},
                   {"mae_mm_per_day", s.mae_phys}});
  j["per_sample"] = per;
  return j.dump(2);
}

}  // namespace gridcast

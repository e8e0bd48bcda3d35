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

#include "gridcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "gridcast/error.hpp"
#include "gridcast/gtf.hpp"

namespace gridcast {

using nlohmann::json;

namespace {

// Rows of the year axis selected into a new cube.
PredictorCube select_years(const PredictorCube& cube, const std::vector<std::int64_t>& years) {
  PredictorCube out;
  out.lat_coords = cube.lat_coords;
  out.lon_coords = cube.lon_coords;
  out.channel_names = cube.channel_names;
  out.years = years;
  const std::int64_t slab = cube.fortnights() * cube.lat() * cube.lon() * cube.channels();
  out.values = Tensor<float>(Shape{static_cast<std::int64_t>(years.size()), cube.fortnights(),
                                   cube.lat(), cube.lon(), cube.channels()});
  for (std::size_t i = 0; i < years.size(); ++i) {
    const auto it = std::find(cube.years.begin(), cube.years.end(), years[i]);
    if (it == cube.years.end())
      throw DataError("year " + std::to_string(years[i]) + " missing from predictor cube");
    const std::int64_t src = it - cube.years.begin();
    std::copy_n(cube.values.data() + src * slab, slab,
                out.values.data() + static_cast<std::int64_t>(i) * slab);
  }
  return out;
}

std::int64_t resolve_sst(const PredictorCube& cube, std::int64_t requested) {
  if (requested >= 0) {
    if (requested >= cube.channels())
      throw ConfigError("sst channel " + std::to_string(requested) + " out of range");
    return requested;
  }
  for (std::size_t c = 0; c < cube.channel_names.size(); ++c)
    if (cube.channel_names[c] == "sst") return static_cast<std::int64_t>(c);
  return -1;  // no SST channel; imputation becomes a no-NaN check
}

std::vector<float> minmax_vector(std::span<const float> v, const NormParams& norms, bool clip) {
  std::vector<float> out(v.size());
  const double mn = norms.min_v[0];
  const double mx = norms.max_v[0];
  for (std::size_t i = 0; i < v.size(); ++i) {
    double y = (static_cast<double>(v[i]) - mn) / (mx - mn);
    if (clip) y = std::clamp(y, 0.0, 1.0);
    out[i] = static_cast<float>(y);
  }
  return out;
}

}  // namespace

PreprocessedSplit preprocess_split(const PredictorCube& raw,
                                   const std::map<std::string, TargetGrid>& target_grids,
                                   const PipelineOptions& options) {
  if (target_grids.empty()) throw ConfigError("preprocess: no target grids");
  const YearSplit split = split_years(raw.years, options.split);

  PreprocessedSplit out;
  // Raw year slices are scoped so full-scale cubes free before imputation.
  Tensor<float> train_norm, test_norm;
  {
    PredictorCube train_raw = select_years(raw, split.train_years);
    // Scaling parameters come from the training years only.
    out.predictor_norms = fit_minmax(train_raw.values, SplitRole::train, raw.channel_names);
    train_norm =
        apply_minmax(train_raw.values, out.predictor_norms, /*clip=*/false, SplitRole::train);
  }
  {
    PredictorCube test_raw = select_years(raw, split.test_years);
    test_norm = apply_minmax(test_raw.values, out.predictor_norms, /*clip=*/true, SplitRole::test);
  }

  const std::int64_t sst = resolve_sst(raw, options.sst_channel);
  if (sst >= 0) {
    train_norm = impute_sst(train_norm, sst);
    test_norm = impute_sst(test_norm, sst);
  } else {
    // Without an SST channel any NaN is corrupt; channel 0 stands in as the
    // "allowed" channel so the scan still runs.
    for (const float v : train_norm.values())
      if (std::isnan(v)) throw DataError("NaN in predictors but no SST channel configured");
    for (const float v : test_norm.values())
      if (std::isnan(v)) throw DataError("NaN in predictors but no SST channel configured");
  }

  if (options.downsample) {
    train_norm = downsample_avgpool3(train_norm);
    test_norm = downsample_avgpool3(test_norm);
  }

  out.train_predictors.values = std::move(train_norm);
  out.train_predictors.years = split.train_years;
  out.train_predictors.channel_names = raw.channel_names;
  out.test_predictors.values = std::move(test_norm);
  out.test_predictors.years = split.test_years;
  out.test_predictors.channel_names = raw.channel_names;

  // Targets: one mask shared by all (validated identical), then per-target
  // flatten + train-fitted normalization.
  bool mask_built = false;
  for (const auto& [name, grid] : target_grids) {
    if (static_cast<std::int64_t>(grid.years.size()) != grid.values.dim(0))
      throw DataError("target '" + name + "': year labels do not match tensor");
    if (grid.years != raw.years)
      throw DataError("target '" + name + "': year labels differ from predictors");
    ValidMask mask = build_valid_mask(grid);
    if (!mask_built) {
      out.mask = mask;
      mask_built = true;
    } else if (mask.indices != out.mask.indices || mask.lat != out.mask.lat ||
               mask.lon != out.mask.lon) {
      throw DataError("target '" + name + "' has a different valid mask than other targets");
    }

    const std::int64_t cells = grid.lat() * grid.lon();
    std::vector<std::vector<float>> train_vecs, test_vecs;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (std::size_t yi = 0; yi < grid.years.size(); ++yi) {
      auto vec = flatten_target(
          std::span<const float>(grid.values.data() + static_cast<std::int64_t>(yi) * cells,
                                 static_cast<std::size_t>(cells)),
          grid.lat(), grid.lon(), out.mask);
      if (options.split.is_test(grid.years[yi])) {
        test_vecs.push_back(std::move(vec));
      } else {
        for (const float v : vec) {
          mn = std::min(mn, static_cast<double>(v));
          mx = std::max(mx, static_cast<double>(v));
        }
        train_vecs.push_back(std::move(vec));
      }
    }
    if (!(mx > mn)) throw DataError("target '" + name + "': degenerate train range");

    TargetSplit ts;
    ts.norms.channel_names = {name};
    ts.norms.min_v = {mn};
    ts.norms.max_v = {mx};
    ts.norms.fitted_on_train = true;
    for (const auto& v : train_vecs) ts.train.push_back(minmax_vector(v, ts.norms, false));
    for (const auto& v : test_vecs) ts.test.push_back(minmax_vector(v, ts.norms, true));
    out.targets.emplace(name, std::move(ts));
  }
  return out;
}

namespace {

Tensor<float> vectors_to_tensor(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) throw DataError("no target vectors to save");
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
  const std::int64_t m = static_cast<std::int64_t>(rows.front().size());
  Tensor<float> t(Shape{n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    if (static_cast<std::int64_t>(rows[static_cast<std::size_t>(i)].size()) != m)
      throw DataError("ragged target vectors");
    std::copy_n(rows[static_cast<std::size_t>(i)].data(), m, t.data() + i * m);
  }
  return t;
}

std::vector<std::vector<float>> tensor_to_vectors(const Tensor<float>& t) {
  std::vector<std::vector<float>> rows;
  for (std::int64_t i = 0; i < t.dim(0); ++i)
    rows.emplace_back(t.data() + i * t.dim(1), t.data() + (i + 1) * t.dim(1));
  return rows;
}

}  // namespace

void save_preprocessed(const PreprocessedSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_predictor_cube(split.train_predictors, dir / "train_predictors");
  save_predictor_cube(split.test_predictors, dir / "test_predictors");
  save_norm_params(split.predictor_norms, dir / "predictor_norms.json");
  save_valid_mask(split.mask, dir / "mask.json");
  json meta;
  meta["train_years"] = split.train_predictors.years;
  meta["test_years"] = split.test_predictors.years;
  json names = json::array();
  for (const auto& [name, ts] : split.targets) {
    names.push_back(name);
    encode_gtf(vectors_to_tensor(ts.train), dir / ("targets_" + name + "_train.gtf"));
    encode_gtf(vectors_to_tensor(ts.test), dir / ("targets_" + name + "_test.gtf"));
    save_norm_params(ts.norms, dir / ("target_norms_" + name + ".json"));
  }
  meta["targets"] = names;
  std::ofstream out(dir / "split.json");
  if (!out) throw DataError("cannot create " + (dir / "split.json").string());
  out << meta.dump(2) << "\n";
}

std::vector<std::string> preprocessed_target_names(const std::filesystem::path& dir) {
  std::ifstream in(dir / "split.json");
  if (!in) throw DataError("no preprocessed dataset at " + dir.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw DataError("bad split.json: " + std::string(e.what()));
  }
  return meta.at("targets").get<std::vector<std::string>>();
}

PreprocessedSplit load_preprocessed(const std::filesystem::path& dir) {
  PreprocessedSplit split;
  split.train_predictors = load_predictor_cube(dir / "train_predictors");
  split.test_predictors = load_predictor_cube(dir / "test_predictors");
  split.predictor_norms = load_norm_params(dir / "predictor_norms.json");
  split.mask = load_valid_mask(dir / "mask.json");
  for (const auto& name : preprocessed_target_names(dir)) {
    TargetSplit ts;
    ts.train = tensor_to_vectors(decode_gtf(dir / ("targets_" + name + "_train.gtf")));
    ts.test = tensor_to_vectors(decode_gtf(dir / ("targets_" + name + "_test.gtf")));
    ts.norms = load_norm_params(dir / ("target_norms_" + name + ".json"));
    split.targets.emplace(name, std::move(ts));
  }
  return split;
}

}  // namespace gridcast

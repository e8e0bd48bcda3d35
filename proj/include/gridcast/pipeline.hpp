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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gridcast/grid.hpp"
#include "gridcast/preprocess.hpp"

namespace gridcast {

// End-to-end preprocessing of one raw dataset. The stage order is fixed:
// split -> fit on train -> normalize (clip test) -> impute SST -> downsample.
struct PipelineOptions {
  SplitSpec split;
  std::int64_t sst_channel = -1;  // -1: by channel name "sst", else no imputation
  bool downsample = true;         // false for data already at network resolution
};

struct TargetSplit {
  std::vector<std::vector<float>> train;  // normalized vectors, one per train year
  std::vector<std::vector<float>> test;
  NormParams norms;  // single channel, fitted on train
};

struct PreprocessedSplit {
  PredictorCube train_predictors;
  PredictorCube test_predictors;
  NormParams predictor_norms;
  ValidMask mask;
  std::map<std::string, TargetSplit> targets;
};

PreprocessedSplit preprocess_split(const PredictorCube& raw,
                                   const std::map<std::string, TargetGrid>& target_grids,
                                   const PipelineOptions& options);

// Directory layout used by the CLI:
//   train_predictors.{gtf,json}  test_predictors.{gtf,json}
//   predictor_norms.json         mask.json
//   targets_<name>_train.gtf     targets_<name>_test.gtf
//   target_norms_<name>.json     split.json
void save_preprocessed(const PreprocessedSplit& split, const std::filesystem::path& dir);
PreprocessedSplit load_preprocessed(const std::filesystem::path& dir);

// Names of targets present in a preprocessed directory.
std::vector<std::string> preprocessed_target_names(const std::filesystem::path& dir);

}  // namespace gridcast

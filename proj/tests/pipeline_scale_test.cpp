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
// Full-scale pipeline smoke: 85 years at the documented network-resolution
// predictor shape (11, 87, 180, 25) and the 33x35/357-cell target layout run
// the whole tool chain with no shape errors. Training is capped to a few
// steps; this checks plumbing at scale, not skill.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gridcast/gtf.hpp"

namespace gridcast {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef GRIDCAST_CLI_PATH
#error "GRIDCAST_CLI_PATH must point at the gridcast binary"
#endif

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(GRIDCAST_CLI_PATH) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(FullScale, PipelineCompletesWithDocumentedShapes) {
  const fs::path dir = fs::temp_directory_path() / "gridcast_fullscale";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const std::string d = dir.string() + "/";

  ASSERT_EQ(run_cli("gen-synth --out " + d + "world --years 85 --first-year 1940 "
                    "--lat 87 --lon 180 --channels 25 --network-resolution "
                    "--target-lat 33 --target-lon 35 --valid-density 0.309 --seed 1",
                    log),
            0);
  EXPECT_EQ(gtf_shape(dir / "world/predictors.gtf"), (Shape{85, 11, 87, 180, 25}));
  EXPECT_EQ(gtf_shape(dir / "world/target_jjas.gtf"), (Shape{85, 33, 35, 1}));

  ASSERT_EQ(run_cli("preprocess --data " + d + "world --out " + d + "prep", log), 0);
  EXPECT_EQ(gtf_shape(dir / "prep/train_predictors.gtf"), (Shape{64, 11, 87, 180, 25}));
  EXPECT_EQ(gtf_shape(dir / "prep/test_predictors.gtf"), (Shape{21, 11, 87, 180, 25}));
  EXPECT_EQ(gtf_shape(dir / "prep/targets_jjas_train.gtf"), (Shape{64, 357}));
  EXPECT_EQ(gtf_shape(dir / "prep/targets_jjas_test.gtf"), (Shape{21, 357}));
  {
    std::ifstream in(dir / "prep/mask.json");
    json mask = json::parse(in);
    EXPECT_EQ(mask.at("indices").size(), 357u);
  }

  // Default augmentation geometry: 64 years -> 1088 planned samples.
  ASSERT_EQ(run_cli("augment --data " + d + "prep --out " + d + "plan --seed 0", log), 0);
  {
    std::ifstream in(dir / "plan/plan.json");
    json plan = json::parse(in);
    EXPECT_EQ(plan.at("entries").size(), 1088u);
  }

  // A few real optimizer steps at full tensor shape, then scoring of all 21
  // held-out years.
  ASSERT_EQ(run_cli("train --data " + d + "prep --plan " + d + "plan/plan.json "
                    "--target jjas --out " + d + "run --blocks 1 --bottleneck 64 "
                    "--epochs 1 --max-steps 2 --batch-size 4 --patience 1",
                    log),
            0);
  ASSERT_EQ(run_cli("evaluate --data " + d + "prep --checkpoint " + d + "run/checkpoint "
                    "--target jjas --out " + d + "eval",
                    log),
            0);
  std::ifstream in(dir / "eval/metrics.json");
  json metrics = json::parse(in);
  EXPECT_EQ(metrics.at("per_sample").size(), 21u);
  EXPECT_TRUE(metrics.at("aggregate").at("mse").is_number());

  fs::remove_all(dir);
}

}  // namespace
}  // namespace gridcast

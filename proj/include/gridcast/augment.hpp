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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gridcast/preprocess.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

// Sliding-window geometry for the inclusive/occlusive variants.
struct WindowSpec {
  std::int64_t window_h = 40;
  std::int64_t window_w = 60;
  std::int64_t stride_h = 26;
  std::int64_t stride_w = 40;
  float fill = -1.0f;
};

enum class Variant : std::uint8_t { original, inclusive, occlusive };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// One planned sample: a source year plus how to derive the tensor from it.
// Targets pair by source year only; variants never change them.
struct AugmentEntry {
  std::int64_t year_index = 0;  // position in the train cube's year axis
  std::int64_t year_label = 0;
  Variant variant = Variant::original;
  std::int64_t row = 0;
  std::int64_t col = 0;
};

// The full augmentation plan in its shuffled order, reproducible from the
// seed. Materialization is lazy: entries are descriptions, not tensors.
struct AugmentPlan {
  WindowSpec window;
  std::uint64_t shuffle_seed = 0;
  std::int64_t grid_h = 0;
  std::int64_t grid_w = 0;
  std::vector<AugmentEntry> entries;           // shuffled order
  std::vector<std::int64_t> permutation;       // entries[i] = canonical[permutation[i]]
};

// Top-left window positions in row-major order: r in {0, sh, 2sh, ...} with
// r + h <= H, likewise columns.
std::vector<std::pair<std::int64_t, std::int64_t>> window_positions(std::int64_t grid_h,
                                                                    std::int64_t grid_w,
                                                                    const WindowSpec& spec);

// Keep only the window, fill value elsewhere. Sample layout (T, H, W, C).
Tensor<float> make_inclusive(const Tensor<float>& sample, std::int64_t row, std::int64_t col,
                             const WindowSpec& spec);

// Erase the window, keep everything else.
Tensor<float> make_occlusive(const Tensor<float>& sample, std::int64_t row, std::int64_t col,
                             const WindowSpec& spec);

// Per year: the original plus one inclusive and one occlusive sample at every
// window position, shuffled once by a seeded Fisher-Yates permutation.
// Augmentation is a training-set operation; test data is refused.
AugmentPlan augment_dataset(std::span<const std::int64_t> year_labels, std::int64_t grid_h,
                            std::int64_t grid_w, const WindowSpec& spec,
                            std::uint64_t shuffle_seed, SplitRole role = SplitRole::train);

// Materialize one planned sample from its source-year tensor (T, H, W, C).
Tensor<float> materialize(const AugmentEntry& entry, const Tensor<float>& year_sample,
                          const WindowSpec& spec);

void save_augment_plan(const AugmentPlan& plan, const std::filesystem::path& path);
AugmentPlan load_augment_plan(const std::filesystem::path& path);

}  // namespace gridcast

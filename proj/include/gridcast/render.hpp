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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gridcast/tensor.hpp"

namespace gridcast {

// Side-by-side truth/prediction raster. Output is a binary PPM (P6) plus a
// text sidecar describing the color scale. The scale is anchored to the
// truth's min/max over valid cells and shared by both panels.
//
// Colormap: linear ramp white (255,255,255) -> deep blue (8,48,107); NaN
// cells render gray (128,128,128); the separator column is white.
struct RenderOptions {
  std::int64_t cell_px = 8;
  std::int64_t gap_px = 4;
};

inline std::array<std::uint8_t, 3> rainfall_color(double t) {
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  const auto mix = [t](double lo, double hi) {
    return static_cast<std::uint8_t>(lo + (hi - lo) * t + 0.5);
  };
  return {mix(255.0, 8.0), mix(255.0, 48.0), mix(255.0, 107.0)};
}

inline constexpr std::array<std::uint8_t, 3> kNanColor = {128, 128, 128};
inline constexpr std::array<std::uint8_t, 3> kGapColor = {255, 255, 255};

struct RenderedImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
  double scale_min = 0.0;
  double scale_max = 0.0;
};

// Pure rasterization of a truth/prediction pair of (lat, lon) grids with
// identical NaN patterns.
RenderedImage render_pair(const Tensor<float>& truth, const Tensor<float>& prediction,
                          const RenderOptions& options = {});

// Writes <base>.ppm and <base>_scale.txt.
void render_map(const Tensor<float>& truth, const Tensor<float>& prediction,
                const std::filesystem::path& base, const RenderOptions& options = {});

}  // namespace gridcast

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

#include "gridcast/render.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "gridcast/error.hpp"

namespace gridcast {

namespace {

void put_pixel(std::vector<std::uint8_t>& rgb, std::int64_t width, std::int64_t x, std::int64_t y,
               const std::array<std::uint8_t, 3>& color) {
  const std::size_t off = 3 * static_cast<std::size_t>(y * width + x);
  rgb[off] = color[0];
  rgb[off + 1] = color[1];
  rgb[off + 2] = color[2];
}

void blit_panel(std::vector<std::uint8_t>& rgb, std::int64_t width, const Tensor<float>& grid,
                std::int64_t x0, double lo, double hi, const RenderOptions& opt) {
  const std::int64_t H = grid.dim(0), W = grid.dim(1);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::int64_t r = 0; r < H; ++r)
    for (std::int64_t c = 0; c < W; ++c) {
      const float v = grid.values()[r * W + c];
      const auto color = std::isnan(v)
                             ? kNanColor
                             : rainfall_color((static_cast<double>(v) - lo) / span);
      for (std::int64_t dy = 0; dy < opt.cell_px; ++dy)
        for (std::int64_t dx = 0; dx < opt.cell_px; ++dx)
          put_pixel(rgb, width, x0 + c * opt.cell_px + dx, r * opt.cell_px + dy, color);
    }
}

}  // namespace

RenderedImage render_pair(const Tensor<float>& truth, const Tensor<float>& prediction,
                          const RenderOptions& options) {
  if (truth.rank() != 2 || prediction.rank() != 2)
    throw ShapeError("render: grids must be rank 2, got " + shape_str(truth.dims()) + " and " +
                     shape_str(prediction.dims()));
  if (truth.dims() != prediction.dims())
    throw ShapeError("render: grid shapes differ: " + shape_str(truth.dims()) + " vs " +
                     shape_str(prediction.dims()));
  if (options.cell_px < 1 || options.gap_px < 0) throw ConfigError("render: bad pixel options");

  const std::int64_t H = truth.dim(0), W = truth.dim(1);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < H * W; ++i) {
    const float tv = truth.values()[i];
    const float pv = prediction.values()[i];
    if (std::isnan(tv) != std::isnan(pv))
      throw DataError("render: NaN patterns differ at cell (" + std::to_string(i / W) + "," +
                      std::to_string(i % W) + ")");
    if (!std::isnan(tv)) {
      lo = std::min(lo, static_cast<double>(tv));
      hi = std::max(hi, static_cast<double>(tv));
    }
  }
  if (!std::isfinite(lo)) throw DataError("render: truth grid has no valid cells");

  RenderedImage img;
  img.scale_min = lo;
  img.scale_max = hi;
  img.width = 2 * W * options.cell_px + options.gap_px;
  img.height = H * options.cell_px;
  img.rgb.assign(static_cast<std::size_t>(3 * img.width * img.height), 0);

  // Gap column first so panels overwrite their own areas.
  for (std::int64_t y = 0; y < img.height; ++y)
    for (std::int64_t x = 0; x < options.gap_px; ++x)
      put_pixel(img.rgb, img.width, W * options.cell_px + x, y, kGapColor);

  blit_panel(img.rgb, img.width, truth, 0, lo, hi, options);
  blit_panel(img.rgb, img.width, prediction, W * options.cell_px + options.gap_px, lo, hi,
             options);
  return img;
}

void render_map(const Tensor<float>& truth, const Tensor<float>& prediction,
                const std::filesystem::path& base, const RenderOptions& options) {
  const RenderedImage img = render_pair(truth, prediction, options);

  const std::filesystem::path ppm = base.string() + ".ppm";
  std::ofstream out(ppm, std::ios::binary);
  if (!out) throw DataError("cannot create " + ppm.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw DataError("write failed for " + ppm.string());

  std::ofstream scale(base.string() + "_scale.txt");
  scale << "scale_min " << img.scale_min << "\n"
        << "scale_max " << img.scale_max << "\n"
        << "colormap linear white(255,255,255) -> blue(8,48,107), anchored to truth min/max\n"
        << "nan_color gray(128,128,128)\n"
        << "layout truth | gap | prediction, " << options.cell_px << " px per grid cell\n";
}

}  // namespace gridcast

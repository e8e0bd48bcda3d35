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

#include "gridcast/augment.hpp"

#include <fstream>

#include <json.hpp>

#include "gridcast/error.hpp"
#include "gridcast/rng.hpp"

namespace gridcast {

using nlohmann::json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::original: return "original";
    case Variant::inclusive: return "inclusive";
    case Variant::occlusive: return "occlusive";
  }
  throw ConfigError("unknown variant");
}

Variant variant_from_name(const std::string& name) {
  if (name == "original") return Variant::original;
  if (name == "inclusive") return Variant::inclusive;
  if (name == "occlusive") return Variant::occlusive;
  throw ConfigError("unknown augmentation variant '" + name + "'");
}

std::vector<std::pair<std::int64_t, std::int64_t>> window_positions(std::int64_t grid_h,
                                                                    std::int64_t grid_w,
                                                                    const WindowSpec& spec) {
  if (spec.stride_h < 1 || spec.stride_w < 1)
    throw ConfigError("window strides must be >= 1");
  if (spec.window_h > grid_h || spec.window_w > grid_w)
    throw ConfigError("window (" + std::to_string(spec.window_h) + "," +
                      std::to_string(spec.window_w) + ") exceeds grid (" +
                      std::to_string(grid_h) + "," + std::to_string(grid_w) + ")");
  std::vector<std::pair<std::int64_t, std::int64_t>> positions;
  for (std::int64_t r = 0; r + spec.window_h <= grid_h; r += spec.stride_h)
    for (std::int64_t c = 0; c + spec.window_w <= grid_w; c += spec.stride_w)
      positions.emplace_back(r, c);
  return positions;
}

namespace {

void check_sample(const Tensor<float>& sample, std::int64_t row, std::int64_t col,
                  const WindowSpec& spec) {
  if (sample.rank() != 4)
    throw ShapeError("augment: sample must be (T, H, W, C), got " + shape_str(sample.dims()));
  const std::int64_t H = sample.dim(1), W = sample.dim(2);
  if (row < 0 || col < 0 || row + spec.window_h > H || col + spec.window_w > W)
    throw ConfigError("augment: window at (" + std::to_string(row) + "," + std::to_string(col) +
                      ") does not fit grid (" + std::to_string(H) + "," + std::to_string(W) +
                      ")");
}

}  // namespace

Tensor<float> make_inclusive(const Tensor<float>& sample, std::int64_t row, std::int64_t col,
                             const WindowSpec& spec) {
  check_sample(sample, row, col, spec);
  const std::int64_t T = sample.dim(0), H = sample.dim(1), W = sample.dim(2),
                     C = sample.dim(3);
  Tensor<float> out(sample.dims(), spec.fill);
  const float* src = sample.data();
  float* dst = out.data();
  for (std::int64_t t = 0; t < T; ++t)
    for (std::int64_t r = row; r < row + spec.window_h; ++r) {
      const std::int64_t base = ((t * H + r) * W + col) * C;
      std::copy_n(src + base, spec.window_w * C, dst + base);
    }
  return out;
}

Tensor<float> make_occlusive(const Tensor<float>& sample, std::int64_t row, std::int64_t col,
                             const WindowSpec& spec) {
  check_sample(sample, row, col, spec);
  const std::int64_t T = sample.dim(0), H = sample.dim(1), W = sample.dim(2),
                     C = sample.dim(3);
  Tensor<float> out = sample.clone();
  float* dst = out.data();
  for (std::int64_t t = 0; t < T; ++t)
    for (std::int64_t r = row; r < row + spec.window_h; ++r) {
      const std::int64_t base = ((t * H + r) * W + col) * C;
      std::fill_n(dst + base, spec.window_w * C, spec.fill);
    }
  return out;
}

AugmentPlan augment_dataset(std::span<const std::int64_t> year_labels, std::int64_t grid_h,
                            std::int64_t grid_w, const WindowSpec& spec,
                            std::uint64_t shuffle_seed, SplitRole role) {
  if (role != SplitRole::train)
    throw ProtocolError("augmentation applies only to training data; refusing a " +
                        std::string(role == SplitRole::test ? "test" : "full") + " set");
  if (year_labels.empty()) throw ConfigError("augment_dataset: no training years");
  const auto positions = window_positions(grid_h, grid_w, spec);

  AugmentPlan plan;
  plan.window = spec;
  plan.shuffle_seed = shuffle_seed;
  plan.grid_h = grid_h;
  plan.grid_w = grid_w;

  std::vector<AugmentEntry> canonical;
  canonical.reserve(year_labels.size() * (1 + 2 * positions.size()));
  for (std::size_t yi = 0; yi < year_labels.size(); ++yi) {
    const auto idx = static_cast<std::int64_t>(yi);
    canonical.push_back({idx, year_labels[yi], Variant::original, 0, 0});
    for (const auto& [r, c] : positions) {
      canonical.push_back({idx, year_labels[yi], Variant::inclusive, r, c});
      canonical.push_back({idx, year_labels[yi], Variant::occlusive, r, c});
    }
  }

  plan.permutation.resize(canonical.size());
  for (std::size_t i = 0; i < canonical.size(); ++i)
    plan.permutation[i] = static_cast<std::int64_t>(i);
  std::mt19937_64 rng(shuffle_seed);
  fisher_yates(std::span<std::int64_t>(plan.permutation), rng);

  plan.entries.reserve(canonical.size());
  for (const std::int64_t i : plan.permutation)
    plan.entries.push_back(canonical[static_cast<std::size_t>(i)]);
  return plan;
}

Tensor<float> materialize(const AugmentEntry& entry, const Tensor<float>& year_sample,
                          const WindowSpec& spec) {
  switch (entry.variant) {
    case Variant::original: return year_sample;
    case Variant::inclusive: return make_inclusive(year_sample, entry.row, entry.col, spec);
    case Variant::occlusive: return make_occlusive(year_sample, entry.row, entry.col, spec);
  }
  throw ConfigError("unknown variant in augment entry");
}

void save_augment_plan(const AugmentPlan& plan, const std::filesystem::path& path) {
  json j;
  j["window"] = {{"h", plan.window.window_h},
                 {"w", plan.window.window_w},
                 {"stride_h", plan.window.stride_h},
                 {"stride_w", plan.window.stride_w},
                 {"fill", plan.window.fill}};
  j["shuffle_seed"] = plan.shuffle_seed;
  j["grid"] = {{"h", plan.grid_h}, {"w", plan.grid_w}};
  j["permutation"] = plan.permutation;
  json entries = json::array();
  for (const auto& e : plan.entries)
    entries.push_back({{"year_index", e.year_index},
                       {"year", e.year_label},
                       {"variant", variant_name(e.variant)},
                       {"row", e.row},
                       {"col", e.col}});
  j["entries"] = entries;
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  out << j.dump(2) << "\n";
}

AugmentPlan load_augment_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open augmentation plan " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad JSON in " + path.string() + ": " + e.what());
  }
  AugmentPlan plan;
  plan.window.window_h = j.at("window").at("h").get<std::int64_t>();
  plan.window.window_w = j.at("window").at("w").get<std::int64_t>();
  plan.window.stride_h = j.at("window").at("stride_h").get<std::int64_t>();
  plan.window.stride_w = j.at("window").at("stride_w").get<std::int64_t>();
  plan.window.fill = j.at("window").at("fill").get<float>();
  plan.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
  plan.grid_h = j.at("grid").at("h").get<std::int64_t>();
  plan.grid_w = j.at("grid").at("w").get<std::int64_t>();
  plan.permutation = j.at("permutation").get<std::vector<std::int64_t>>();
  for (const auto& e : j.at("entries")) {
    AugmentEntry entry;
    entry.year_index = e.at("year_index").get<std::int64_t>();
    entry.year_label = e.at("year").get<std::int64_t>();
    entry.variant = variant_from_name(e.at("variant").get<std::string>());
    entry.row = e.at("row").get<std::int64_t>();
    entry.col = e.at("col").get<std::int64_t>();
    plan.entries.push_back(entry);
  }
  return plan;
}

}  // namespace gridcast

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
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/error.hpp"
#include "gridcast/ops.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

struct NetworkInput {
  std::int64_t fortnights = 11;
  std::int64_t lat = 87;
  std::int64_t lon = 180;
  std::int64_t channels = 25;
};

// Architecture hyperparameters. The bottleneck is the channel count of the
// temporal-collapse output and therefore the width of the pooled feature
// vector; block k downsamples all three axes by 2 with min(32 * 2^(k-1),
// bottleneck) filters.
struct NetworkSpec {
  std::int64_t num_blocks = 1;
  std::int64_t bottleneck = 64;
  double dropout_rate = 0.3;
  double l2_coeff = 1e-4;
  std::int64_t output_units = 357;
  std::int64_t hidden_units = 512;
  NetworkInput input;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
  // Classic ordering applies the block's final ReLU after the shortcut
  // addition; the alternative applies it to the main path before adding.
  bool relu_before_add = false;

  void validate() const {
    if (num_blocks < 1) throw ConfigError("network: num_blocks must be >= 1");
    if (bottleneck < 1) throw ConfigError("network: bottleneck must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ConfigError("network: dropout_rate must be in [0,1)");
    if (l2_coeff < 0.0) throw ConfigError("network: l2_coeff must be >= 0");
    if (output_units < 1) throw ConfigError("network: output_units must be >= 1");
    if (hidden_units < 1) throw ConfigError("network: hidden_units must be >= 1");
    if (input.fortnights < 1 || input.lat < 1 || input.lon < 1 || input.channels < 1)
      throw ConfigError("network: input extents must be positive");
    std::int64_t t = input.fortnights;
    for (std::int64_t k = 0; k < num_blocks; ++k) t = (t + 1) / 2;
    if (t < 1) throw ConfigError("network: temporal extent collapses to zero before the encoder ends");
  }

  std::int64_t block_filters(std::int64_t k) const {  // k is 1-based
    const std::int64_t base = std::int64_t{32} << (k - 1);
    return std::min(base, bottleneck);
  }
};

template <std::floating_point T>
struct ConvLayer {
  Tensor<T> kernel;  // (kt, kh, kw, Cin, Cout)
  Tensor<T> bias;    // (Cout)
};

template <std::floating_point T>
struct BnLayer {
  Tensor<T> gamma, beta;
  Tensor<T> running_mean, running_var;
};

template <std::floating_point T>
struct ResBlock {
  ConvLayer<T> conv1;
  BnLayer<T> bn1;
  ConvLayer<T> conv2;
  BnLayer<T> bn2;
  std::optional<ConvLayer<T>> projection;  // 1x1x1 strided shortcut
};

template <std::floating_point T>
struct NetworkState {
  std::vector<ResBlock<T>> blocks;
  ConvLayer<T> collapse;
  Tensor<T> dense1_w, dense1_b;
  Tensor<T> dense2_w, dense2_b;
  std::uint64_t init_seed = 0;
  std::int64_t step_count = 0;
};

// (T,H,W,C) extents after each encoder stage, the collapse, and the pool.
struct EncoderShapes {
  std::vector<std::array<std::int64_t, 4>> block_out;  // per block
  std::array<std::int64_t, 3> collapsed;               // (H, W, bottleneck)
};

inline EncoderShapes encoder_shapes(const NetworkSpec& spec) {
  spec.validate();
  EncoderShapes shapes;
  std::int64_t t = spec.input.fortnights, h = spec.input.lat, w = spec.input.lon;
  for (std::int64_t k = 1; k <= spec.num_blocks; ++k) {
    t = (t + 1) / 2;
    h = (h + 1) / 2;
    w = (w + 1) / 2;
    shapes.block_out.push_back({t, h, w, spec.block_filters(k)});
  }
  shapes.collapsed = {h, w, spec.bottleneck};
  return shapes;
}

// Every parameter and buffer shape as a pure function of the spec, in
// checkpoint order. Buffer entries (running stats) are flagged.
struct ManifestEntry {
  std::string name;
  Shape dims;
  bool trainable = true;
};

inline std::vector<ManifestEntry> shape_manifest(const NetworkSpec& spec) {
  spec.validate();
  std::vector<ManifestEntry> m;
  std::int64_t cin = spec.input.channels;
  std::int64_t t = spec.input.fortnights;
  for (std::int64_t k = 1; k <= spec.num_blocks; ++k) {
    const std::int64_t f = spec.block_filters(k);
    const std::string b = "block" + std::to_string(k);
    m.push_back({b + "/conv1/kernel", {3, 3, 3, cin, f}});
    m.push_back({b + "/conv1/bias", {f}});
    m.push_back({b + "/bn1/gamma", {f}});
    m.push_back({b + "/bn1/beta", {f}});
    m.push_back({b + "/bn1/running_mean", {f}, false});
    m.push_back({b + "/bn1/running_var", {f}, false});
    m.push_back({b + "/conv2/kernel", {3, 3, 3, f, f}});
    m.push_back({b + "/conv2/bias", {f}});
    m.push_back({b + "/bn2/gamma", {f}});
    m.push_back({b + "/bn2/beta", {f}});
    m.push_back({b + "/bn2/running_mean", {f}, false});
    m.push_back({b + "/bn2/running_var", {f}, false});
    m.push_back({b + "/shortcut/kernel", {1, 1, 1, cin, f}});
    m.push_back({b + "/shortcut/bias", {f}});
    cin = f;
    t = (t + 1) / 2;
  }
  m.push_back({"collapse/kernel", {t, 3, 3, cin, spec.bottleneck}});
  m.push_back({"collapse/bias", {spec.bottleneck}});
  m.push_back({"dense1/weight", {spec.bottleneck, spec.hidden_units}});
  m.push_back({"dense1/bias", {spec.hidden_units}});
  m.push_back({"dense2/weight", {spec.hidden_units, spec.output_units}});
  m.push_back({"dense2/bias", {spec.output_units}});
  return m;
}

namespace detail {

template <std::floating_point T>
Tensor<T> fan_in_uniform(const Shape& dims, std::int64_t fan_in, std::uint64_t seed) {
  Tensor<T> t(dims);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::mt19937_64 rng(seed);
  for (auto& v : t.values()) v = static_cast<T>((2.0 * rng_unit(rng) - 1.0) * limit);
  return t;
}

template <std::floating_point T>
ConvLayer<T> init_conv(const Shape& kernel_dims, std::uint64_t seed, const std::string& name) {
  ConvLayer<T> layer;
  const std::int64_t fan_in = kernel_dims[0] * kernel_dims[1] * kernel_dims[2] * kernel_dims[3];
  layer.kernel = fan_in_uniform<T>(kernel_dims, fan_in, derive_seed(seed, name + "/kernel"));
  layer.kernel.set_requires_grad(true);
  layer.bias = Tensor<T>(Shape{kernel_dims[4]}, T{0}, true);
  return layer;
}

template <std::floating_point T>
BnLayer<T> init_bn(std::int64_t channels) {
  BnLayer<T> bn;
  bn.gamma = Tensor<T>(Shape{channels}, T{1}, true);
  bn.beta = Tensor<T>(Shape{channels}, T{0}, true);
  bn.running_mean = Tensor<T>(Shape{channels}, T{0});
  bn.running_var = Tensor<T>(Shape{channels}, T{1});
  return bn;
}

}  // namespace detail

// Deterministic initialization: conv/dense kernels are fan-in-scaled uniform
// draws from per-name seeds, batch-norm starts at identity, biases at zero.
template <std::floating_point T>
NetworkState<T> init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  NetworkState<T> state;
  state.init_seed = seed;
  std::int64_t cin = spec.input.channels;
  std::int64_t t = spec.input.fortnights;
  for (std::int64_t k = 1; k <= spec.num_blocks; ++k) {
    const std::int64_t f = spec.block_filters(k);
    const std::string b = "block" + std::to_string(k);
    ResBlock<T> block;
    block.conv1 = detail::init_conv<T>({3, 3, 3, cin, f}, seed, b + "/conv1");
    block.bn1 = detail::init_bn<T>(f);
    block.conv2 = detail::init_conv<T>({3, 3, 3, f, f}, seed, b + "/conv2");
    block.bn2 = detail::init_bn<T>(f);
    block.projection = detail::init_conv<T>({1, 1, 1, cin, f}, seed, b + "/shortcut");
    state.blocks.push_back(std::move(block));
    cin = f;
    t = (t + 1) / 2;
  }
  state.collapse = detail::init_conv<T>({t, 3, 3, cin, spec.bottleneck}, seed, "collapse");
  state.dense1_w = detail::fan_in_uniform<T>({spec.bottleneck, spec.hidden_units},
                                             spec.bottleneck, derive_seed(seed, "dense1/weight"));
  state.dense1_w.set_requires_grad(true);
  state.dense1_b = Tensor<T>(Shape{spec.hidden_units}, T{0}, true);
  state.dense2_w = detail::fan_in_uniform<T>({spec.hidden_units, spec.output_units},
                                             spec.hidden_units, derive_seed(seed, "dense2/weight"));
  state.dense2_w.set_requires_grad(true);
  state.dense2_b = Tensor<T>(Shape{spec.output_units}, T{0}, true);
  return state;
}

// Named trainable parameters, in manifest order.
template <std::floating_point T>
std::vector<std::pair<std::string, Tensor<T>>> trainable_params(NetworkState<T>& state) {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t i = 0; i < state.blocks.size(); ++i) {
    const std::string b = "block" + std::to_string(i + 1);
    auto& blk = state.blocks[i];
    out.emplace_back(b + "/conv1/kernel", blk.conv1.kernel);
    out.emplace_back(b + "/conv1/bias", blk.conv1.bias);
    out.emplace_back(b + "/bn1/gamma", blk.bn1.gamma);
    out.emplace_back(b + "/bn1/beta", blk.bn1.beta);
    out.emplace_back(b + "/conv2/kernel", blk.conv2.kernel);
    out.emplace_back(b + "/conv2/bias", blk.conv2.bias);
    out.emplace_back(b + "/bn2/gamma", blk.bn2.gamma);
    out.emplace_back(b + "/bn2/beta", blk.bn2.beta);
    out.emplace_back(b + "/shortcut/kernel", blk.projection->kernel);
    out.emplace_back(b + "/shortcut/bias", blk.projection->bias);
  }
  out.emplace_back("collapse/kernel", state.collapse.kernel);
  out.emplace_back("collapse/bias", state.collapse.bias);
  out.emplace_back("dense1/weight", state.dense1_w);
  out.emplace_back("dense1/bias", state.dense1_b);
  out.emplace_back("dense2/weight", state.dense2_w);
  out.emplace_back("dense2/bias", state.dense2_b);
  return out;
}

// Every tensor including batch-norm running statistics, in manifest order.
template <std::floating_point T>
std::vector<std::pair<std::string, Tensor<T>>> all_tensors(NetworkState<T>& state) {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t i = 0; i < state.blocks.size(); ++i) {
    const std::string b = "block" + std::to_string(i + 1);
    auto& blk = state.blocks[i];
    out.emplace_back(b + "/conv1/kernel", blk.conv1.kernel);
    out.emplace_back(b + "/conv1/bias", blk.conv1.bias);
    out.emplace_back(b + "/bn1/gamma", blk.bn1.gamma);
    out.emplace_back(b + "/bn1/beta", blk.bn1.beta);
    out.emplace_back(b + "/bn1/running_mean", blk.bn1.running_mean);
    out.emplace_back(b + "/bn1/running_var", blk.bn1.running_var);
    out.emplace_back(b + "/conv2/kernel", blk.conv2.kernel);
    out.emplace_back(b + "/conv2/bias", blk.conv2.bias);
    out.emplace_back(b + "/bn2/gamma", blk.bn2.gamma);
    out.emplace_back(b + "/bn2/beta", blk.bn2.beta);
    out.emplace_back(b + "/bn2/running_mean", blk.bn2.running_mean);
    out.emplace_back(b + "/bn2/running_var", blk.bn2.running_var);
    out.emplace_back(b + "/shortcut/kernel", blk.projection->kernel);
    out.emplace_back(b + "/shortcut/bias", blk.projection->bias);
  }
  out.emplace_back("collapse/kernel", state.collapse.kernel);
  out.emplace_back("collapse/bias", state.collapse.bias);
  out.emplace_back("dense1/weight", state.dense1_w);
  out.emplace_back("dense1/bias", state.dense1_b);
  out.emplace_back("dense2/weight", state.dense2_w);
  out.emplace_back("dense2/bias", state.dense2_b);
  return out;
}

// One residual block: conv(3x3x3, strides) -> BN -> ReLU -> conv(3x3x3, 1)
// -> BN, plus the (projected) shortcut, then the final ReLU.
template <std::floating_point T>
Tensor<T> residual_block(const Tensor<T>& x, ResBlock<T>& block, Strides3 strides,
                         const NetworkSpec& spec, Mode mode, GradTape<T>* tape = nullptr) {
  Tensor<T> h = conv3d(x, block.conv1.kernel, block.conv1.bias, strides, Padding::same, tape);
  h = batch_norm(h, block.bn1.gamma, block.bn1.beta, block.bn1.running_mean,
                 block.bn1.running_var, mode, spec.bn_momentum, spec.bn_eps, tape);
  h = relu(h, tape);
  h = conv3d(h, block.conv2.kernel, block.conv2.bias, {1, 1, 1}, Padding::same, tape);
  h = batch_norm(h, block.bn2.gamma, block.bn2.beta, block.bn2.running_mean,
                 block.bn2.running_var, mode, spec.bn_momentum, spec.bn_eps, tape);

  Tensor<T> shortcut = x;
  const bool unit_stride = strides.t == 1 && strides.h == 1 && strides.w == 1;
  const std::int64_t cin = x.dim(x.rank() - 1);
  const std::int64_t cout = block.conv2.kernel.dim(4);
  if (!(unit_stride && cin == cout)) {
    if (!block.projection)
      throw ShapeError("residual_block: projection required for strided or channel-changing block");
    shortcut = conv3d(x, block.projection->kernel, block.projection->bias, strides,
                      Padding::same, tape);
  }
  if (spec.relu_before_add) {
    h = relu(h, tape);
    return add_residual(h, shortcut, tape);
  }
  Tensor<T> sum = add_residual(h, shortcut, tape);
  return relu(sum, tape);
}

// Collapse the temporal axis with a conv whose temporal kernel spans the full
// remaining extent (valid in time, same in space), then drop the unit axis.
template <std::floating_point T>
Tensor<T> temporal_collapse(const Tensor<T>& x, ConvLayer<T>& layer,
                            GradTape<T>* tape = nullptr) {
  Tensor<T> h = conv3d(x, layer.kernel, layer.bias, {1, 1, 1},
                       Padding3{Padding::valid, Padding::same, Padding::same}, tape);
  const bool batched = h.rank() == 5;
  if (h.dim(batched ? 1 : 0) != 1)
    throw ShapeError("temporal_collapse: kernel did not span the temporal extent");
  Shape squeezed;
  if (batched)
    squeezed = {h.dim(0), h.dim(2), h.dim(3), h.dim(4)};
  else
    squeezed = {h.dim(1), h.dim(2), h.dim(3)};
  return reshape(h, squeezed, tape);
}

// Full forward pass: encoder -> temporal collapse -> GAP -> dense+ReLU ->
// dropout -> dense+sigmoid. Input (B, fortnights, lat, lon, channels);
// outputs lie strictly in (0,1).
template <std::floating_point T>
Tensor<T> forward(const NetworkSpec& spec, NetworkState<T>& state, const Tensor<T>& batch,
                  Mode mode, GradTape<T>* tape = nullptr, std::uint64_t dropout_seed = 0) {
  spec.validate();
  if (batch.rank() != 5)
    throw ShapeError("forward: input must be (batch, fortnights, lat, lon, channels), got " +
                     shape_str(batch.dims()));
  const std::int64_t want[4] = {spec.input.fortnights, spec.input.lat, spec.input.lon,
                                spec.input.channels};
  const char* axis_names[4] = {"fortnights", "lat", "lon", "channels"};
  for (int a = 0; a < 4; ++a)
    if (batch.dim(a + 1) != want[a])
      throw ShapeError(std::string("forward: input axis '") + axis_names[a] + "' is " +
                       std::to_string(batch.dim(a + 1)) + ", spec expects " +
                       std::to_string(want[a]));
  if (static_cast<std::int64_t>(state.blocks.size()) != spec.num_blocks)
    throw ShapeError("forward: state has " + std::to_string(state.blocks.size()) +
                     " blocks, spec expects " + std::to_string(spec.num_blocks));

  Tensor<T> h = batch;
  for (auto& block : state.blocks)
    h = residual_block(h, block, {2, 2, 2}, spec, mode, tape);
  h = temporal_collapse(h, state.collapse, tape);
  Tensor<T> features = global_avg_pool2d(h, tape);  // (B, bottleneck)
  Tensor<T> hidden = relu(dense(features, state.dense1_w, state.dense1_b, tape), tape);
  hidden = dropout(hidden, spec.dropout_rate, mode, dropout_seed, tape);
  Tensor<T> out = dense(hidden, state.dense2_w, state.dense2_b, tape);
  return sigmoid(out, tape);
}

}  // namespace gridcast

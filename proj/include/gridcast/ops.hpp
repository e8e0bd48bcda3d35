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

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridcast/error.hpp"
#include "gridcast/gemm.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/tape.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

enum class Padding { same, valid };
enum class Mode { train, infer };

struct Strides3 {
  std::int64_t t = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;
};

// Per-axis padding; a single Padding applies to all three axes.
struct Padding3 {
  Padding t = Padding::same;
  Padding h = Padding::same;
  Padding w = Padding::same;
  Padding3(Padding all) : t(all), h(all), w(all) {}  // NOLINT: implicit by design
  Padding3(Padding t_, Padding h_, Padding w_) : t(t_), h(h_), w(w_) {}
};

namespace detail {

struct ConvAxis {
  std::int64_t in = 0;
  std::int64_t k = 0;
  std::int64_t stride = 1;
  std::int64_t out = 0;
  std::int64_t pad_begin = 0;
};

inline ConvAxis conv_axis(std::int64_t in, std::int64_t k, std::int64_t stride, Padding pad,
                          const char* axis_name) {
  if (stride < 1) throw ShapeError(std::string("conv3d: stride < 1 on axis ") + axis_name);
  ConvAxis a{in, k, stride, 0, 0};
  if (pad == Padding::same) {
    a.out = (in + stride - 1) / stride;  // ceil(in / stride)
    const std::int64_t pad_total = std::max<std::int64_t>((a.out - 1) * stride + k - in, 0);
    a.pad_begin = pad_total / 2;
  } else {
    if (k > in)
      throw ShapeError(std::string("conv3d: kernel extent ") + std::to_string(k) +
                       " exceeds input extent " + std::to_string(in) + " on axis " + axis_name +
                       " with valid padding");
    a.out = (in - k) / stride + 1;
  }
  return a;
}

}  // namespace detail

// Geometry of one conv3d application. Input layout (B,T,H,W,C) or (T,H,W,C);
// kernel layout (kt,kh,kw,Cin,Cout).
struct Conv3dGeom {
  bool batched = false;
  std::int64_t batch = 1;
  detail::ConvAxis t, h, w;
  std::int64_t cin = 0, cout = 0;
  std::int64_t rows() const { return t.out * h.out * w.out; }  // im2col M
  std::int64_t cols() const { return t.k * h.k * w.k * cin; }  // im2col K
  Shape out_dims() const {
    if (batched) return {batch, t.out, h.out, w.out, cout};
    return {t.out, h.out, w.out, cout};
  }
};

inline Conv3dGeom conv3d_geometry(const Shape& input, const Shape& kernel, Strides3 s,
                                  Padding3 pad) {
  if (kernel.size() != 5)
    throw ShapeError("conv3d: kernel must be rank 5 (kt,kh,kw,Cin,Cout), got " +
                     shape_str(kernel));
  if (input.size() != 4 && input.size() != 5)
    throw ShapeError("conv3d: input must be rank 4 (T,H,W,C) or rank 5 (B,T,H,W,C), got " +
                     shape_str(input));
  Conv3dGeom g;
  g.batched = input.size() == 5;
  const std::size_t o = g.batched ? 1 : 0;
  g.batch = g.batched ? input[0] : 1;
  g.cin = input[o + 3];
  if (kernel[3] != g.cin)
    throw ShapeError("conv3d: input channel axis has " + std::to_string(g.cin) +
                     " channels but kernel expects " + std::to_string(kernel[3]));
  g.cout = kernel[4];
  g.t = detail::conv_axis(input[o + 0], kernel[0], s.t, pad.t, "t");
  g.h = detail::conv_axis(input[o + 1], kernel[1], s.h, pad.h, "h");
  g.w = detail::conv_axis(input[o + 2], kernel[2], s.w, pad.w, "w");
  return g;
}

namespace detail {

// Lower one (T,H,W,C) sample into the (rows x cols) im2col matrix; out-of-range
// taps read as zero.
template <std::floating_point T>
void im2col(const T* x, const Conv3dGeom& g, T* col) {
  const std::int64_t HWC = g.h.in * g.w.in * g.cin;
  const std::int64_t WC = g.w.in * g.cin;
  const std::int64_t K = g.cols();
#pragma omp parallel for schedule(static) collapse(2)
  for (std::int64_t to = 0; to < g.t.out; ++to) {
    for (std::int64_t ho = 0; ho < g.h.out; ++ho) {
      for (std::int64_t wo = 0; wo < g.w.out; ++wo) {
        T* row = col + ((to * g.h.out + ho) * g.w.out + wo) * K;
        std::int64_t idx = 0;
        for (std::int64_t dt = 0; dt < g.t.k; ++dt) {
          const std::int64_t ti = to * g.t.stride - g.t.pad_begin + dt;
          const bool t_ok = ti >= 0 && ti < g.t.in;
          for (std::int64_t dh = 0; dh < g.h.k; ++dh) {
            const std::int64_t hi = ho * g.h.stride - g.h.pad_begin + dh;
            const bool h_ok = hi >= 0 && hi < g.h.in;
            for (std::int64_t dw = 0; dw < g.w.k; ++dw) {
              const std::int64_t wi = wo * g.w.stride - g.w.pad_begin + dw;
              if (t_ok && h_ok && wi >= 0 && wi < g.w.in) {
                const T* src = x + ti * HWC + hi * WC + wi * g.cin;
                for (std::int64_t c = 0; c < g.cin; ++c) row[idx++] = src[c];
              } else {
                for (std::int64_t c = 0; c < g.cin; ++c) row[idx++] = T{0};
              }
            }
          }
        }
      }
    }
  }
}

// Scatter-add the adjoint of im2col back onto the input gradient.
template <std::floating_point T>
void col2im_add(const T* col, const Conv3dGeom& g, T* gx) {
  const std::int64_t HWC = g.h.in * g.w.in * g.cin;
  const std::int64_t WC = g.w.in * g.cin;
  const std::int64_t K = g.cols();
  // Serial: output taps overlap across rows, and a fixed order keeps the
  // accumulation deterministic.
  for (std::int64_t to = 0; to < g.t.out; ++to) {
    for (std::int64_t ho = 0; ho < g.h.out; ++ho) {
      for (std::int64_t wo = 0; wo < g.w.out; ++wo) {
        const T* row = col + ((to * g.h.out + ho) * g.w.out + wo) * K;
        std::int64_t idx = 0;
        for (std::int64_t dt = 0; dt < g.t.k; ++dt) {
          const std::int64_t ti = to * g.t.stride - g.t.pad_begin + dt;
          const bool t_ok = ti >= 0 && ti < g.t.in;
          for (std::int64_t dh = 0; dh < g.h.k; ++dh) {
            const std::int64_t hi = ho * g.h.stride - g.h.pad_begin + dh;
            const bool h_ok = hi >= 0 && hi < g.h.in;
            for (std::int64_t dw = 0; dw < g.w.k; ++dw) {
              const std::int64_t wi = wo * g.w.stride - g.w.pad_begin + dw;
              if (t_ok && h_ok && wi >= 0 && wi < g.w.in) {
                T* dst = gx + ti * HWC + hi * WC + wi * g.cin;
                for (std::int64_t c = 0; c < g.cin; ++c) dst[c] += row[idx++];
              } else {
                idx += g.cin;
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

// 3D convolution, channels-last, lowered to im2col + blocked matmul.
template <std::floating_point T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Strides3 strides, Padding3 padding, GradTape<T>* tape = nullptr) {
  const Conv3dGeom g = conv3d_geometry(input.dims(), kernel.dims(), strides, padding);
  if (bias.rank() != 1 || bias.dim(0) != g.cout)
    throw ShapeError("conv3d: bias must have shape (" + std::to_string(g.cout) + "), got " +
                     shape_str(bias.dims()));

  Tensor<T> out(g.out_dims());
  const std::int64_t M = g.rows(), K = g.cols(), N = g.cout;
  const std::int64_t in_stride = g.t.in * g.h.in * g.w.in * g.cin;
  std::vector<T> col(static_cast<std::size_t>(M * K));
  const T* bv = bias.data();
  for (std::int64_t b = 0; b < g.batch; ++b) {
    detail::im2col(input.data() + b * in_stride, g, col.data());
    T* o = out.data() + b * M * N;
    gemm_nn(M, N, K, col.data(), kernel.data(), o);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < M; ++r)
      for (std::int64_t c = 0; c < N; ++c) o[r * N + c] += bv[c];
  }

  const bool need = input.requires_grad() || kernel.requires_grad() || bias.requires_grad();
  if (tape && need) {
    out.set_requires_grad(true);
    Tensor<T> in_c = input, k_c = kernel, b_c = bias, out_c = out;
    tape->record([in_c, k_c, b_c, out_c, g]() mutable {
      const std::int64_t M = g.rows(), K = g.cols(), N = g.cout;
      const std::int64_t in_stride = g.t.in * g.h.in * g.w.in * g.cin;
      const T* go = out_c.grad().data();
      std::vector<T> col;
      std::vector<T> dcol;
      if (k_c.requires_grad()) col.resize(static_cast<std::size_t>(M * K));
      if (in_c.requires_grad()) dcol.resize(static_cast<std::size_t>(M * K));
      for (std::int64_t b = 0; b < g.batch; ++b) {
        const T* gob = go + b * M * N;
        if (b_c.requires_grad()) {
          T* gb = b_c.grad().data();
          for (std::int64_t r = 0; r < M; ++r)
            for (std::int64_t c = 0; c < N; ++c) gb[c] += gob[r * N + c];
        }
        if (k_c.requires_grad()) {
          detail::im2col(in_c.data() + b * in_stride, g, col.data());
          gemm_tn(K, N, M, col.data(), gob, k_c.grad().data(), /*accumulate=*/true);
        }
        if (in_c.requires_grad()) {
          gemm_nt(M, K, N, gob, k_c.data(), dcol.data());
          detail::col2im_add(dcol.data(), g, in_c.grad().data() + b * in_stride);
        }
      }
    });
  }
  return out;
}

// Batch normalization over all non-channel axes (channels last). Train mode
// normalizes by batch statistics and updates the running statistics in place:
// running <- momentum * running + (1 - momentum) * batch. Variances are biased
// (divide by N).
template <std::floating_point T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                     double momentum = 0.9, double eps = 1e-5, GradTape<T>* tape = nullptr) {
  if (eps <= 0) throw ConfigError("batch_norm: eps must be > 0, got " + std::to_string(eps));
  if (input.rank() < 1) throw ShapeError("batch_norm: input must have a channel axis");
  const std::int64_t C = input.dim(input.rank() - 1);
  const Tensor<T>* channel_params[] = {&gamma, &beta, &running_mean, &running_var};
  for (const Tensor<T>* t : channel_params)
    if (t->rank() != 1 || t->dim(0) != C)
      throw ShapeError("batch_norm: parameter shape " + shape_str(t->dims()) +
                       " does not match channel count " + std::to_string(C));
  const std::int64_t n_rows = input.size() / C;

  std::vector<double> mean(static_cast<std::size_t>(C), 0.0);
  std::vector<double> inv_std(static_cast<std::size_t>(C), 0.0);
  const T* x = input.data();
  if (mode == Mode::train) {
    std::vector<double> var(static_cast<std::size_t>(C), 0.0);
    for (std::int64_t r = 0; r < n_rows; ++r)
      for (std::int64_t c = 0; c < C; ++c) mean[c] += static_cast<double>(x[r * C + c]);
    for (std::int64_t c = 0; c < C; ++c) mean[c] /= static_cast<double>(n_rows);
    for (std::int64_t r = 0; r < n_rows; ++r)
      for (std::int64_t c = 0; c < C; ++c) {
        const double d = static_cast<double>(x[r * C + c]) - mean[c];
        var[c] += d * d;
      }
    for (std::int64_t c = 0; c < C; ++c) var[c] /= static_cast<double>(n_rows);
    T* rm = running_mean.values().data();
    T* rv = running_var.values().data();
    for (std::int64_t c = 0; c < C; ++c) {
      rm[c] = static_cast<T>(momentum * static_cast<double>(rm[c]) + (1.0 - momentum) * mean[c]);
      rv[c] = static_cast<T>(momentum * static_cast<double>(rv[c]) + (1.0 - momentum) * var[c]);
      inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    }
  } else {
    for (std::int64_t c = 0; c < C; ++c) {
      mean[c] = static_cast<double>(running_mean.values()[c]);
      inv_std[c] = 1.0 / std::sqrt(static_cast<double>(running_var.values()[c]) + eps);
    }
  }

  Tensor<T> out(input.dims());
  T* y = out.data();
  const T* gm = gamma.data();
  const T* bt = beta.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n_rows; ++r)
    for (std::int64_t c = 0; c < C; ++c) {
      const double xhat = (static_cast<double>(x[r * C + c]) - mean[c]) * inv_std[c];
      y[r * C + c] = static_cast<T>(static_cast<double>(gm[c]) * xhat + static_cast<double>(bt[c]));
    }

  const bool need = input.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  if (tape && need) {
    out.set_requires_grad(true);
    Tensor<T> in_c = input, gm_c = gamma, bt_c = beta, out_c = out;
    const bool train = mode == Mode::train;
    tape->record([in_c, gm_c, bt_c, out_c, mean, inv_std, train, C, n_rows]() mutable {
      const T* x = in_c.data();
      const T* gm = gm_c.data();
      const T* go = out_c.grad().data();
      if (gm_c.requires_grad()) {
        T* gg = gm_c.grad().data();
        for (std::int64_t r = 0; r < n_rows; ++r)
          for (std::int64_t c = 0; c < C; ++c) {
            const double xhat = (static_cast<double>(x[r * C + c]) - mean[c]) * inv_std[c];
            gg[c] += static_cast<T>(static_cast<double>(go[r * C + c]) * xhat);
          }
      }
      if (bt_c.requires_grad()) {
        T* gb = bt_c.grad().data();
        for (std::int64_t r = 0; r < n_rows; ++r)
          for (std::int64_t c = 0; c < C; ++c) gb[c] += go[r * C + c];
      }
      if (!in_c.requires_grad()) return;
      T* gx = in_c.grad().data();
      if (!train) {
        for (std::int64_t r = 0; r < n_rows; ++r)
          for (std::int64_t c = 0; c < C; ++c)
            gx[r * C + c] += static_cast<T>(static_cast<double>(go[r * C + c]) *
                                            static_cast<double>(gm[c]) * inv_std[c]);
        return;
      }
      // Train mode: statistics depend on the input, so the adjoint carries
      // the mean/variance terms.
      const double n = static_cast<double>(n_rows);
      std::vector<double> sum_dxhat(static_cast<std::size_t>(C), 0.0);
      std::vector<double> sum_dxhat_xc(static_cast<std::size_t>(C), 0.0);
      for (std::int64_t r = 0; r < n_rows; ++r)
        for (std::int64_t c = 0; c < C; ++c) {
          const double dxhat =
              static_cast<double>(go[r * C + c]) * static_cast<double>(gm[c]);
          sum_dxhat[c] += dxhat;
          sum_dxhat_xc[c] += dxhat * (static_cast<double>(x[r * C + c]) - mean[c]);
        }
      for (std::int64_t r = 0; r < n_rows; ++r)
        for (std::int64_t c = 0; c < C; ++c) {
          const double xc = static_cast<double>(x[r * C + c]) - mean[c];
          const double dxhat =
              static_cast<double>(go[r * C + c]) * static_cast<double>(gm[c]);
          const double term = dxhat - sum_dxhat[c] / n -
                              xc * inv_std[c] * inv_std[c] * sum_dxhat_xc[c] / n;
          gx[r * C + c] += static_cast<T>(term * inv_std[c]);
        }
    });
  }
  return out;
}

template <std::floating_point T>
Tensor<T> relu(const Tensor<T>& x, GradTape<T>* tape = nullptr) {
  Tensor<T> y(x.dims());
  const T* xv = x.data();
  T* yv = y.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) yv[i] = xv[i] > T{0} ? xv[i] : T{0};
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor<T> x_c = x, y_c = y;
    tape->record([x_c, y_c]() mutable {
      const T* xv = x_c.data();
      const T* gy = y_c.grad().data();
      T* gx = x_c.grad().data();
      const std::int64_t n = x_c.size();
      for (std::int64_t i = 0; i < n; ++i)
        if (xv[i] > T{0}) gx[i] += gy[i];
    });
  }
  return y;
}

namespace detail {
// Saturation-guarded logistic: results are pinned to the nearest
// representable values inside (0,1) so the strict output range holds even
// for extreme inputs.
template <std::floating_point T>
T stable_sigmoid(T x) {
  T s;
  if (x >= T{0}) {
    s = T{1} / (T{1} + std::exp(-x));
  } else {
    const T e = std::exp(x);
    s = e / (T{1} + e);
  }
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = T{1} - std::numeric_limits<T>::epsilon() / T{2};
  return std::min(std::max(s, lo), hi);
}
}  // namespace detail

template <std::floating_point T>
Tensor<T> sigmoid(const Tensor<T>& x, GradTape<T>* tape = nullptr) {
  Tensor<T> y(x.dims());
  const T* xv = x.data();
  T* yv = y.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) yv[i] = detail::stable_sigmoid(xv[i]);
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    Tensor<T> x_c = x, y_c = y;
    tape->record([x_c, y_c]() mutable {
      const T* s = y_c.data();
      const T* gy = y_c.grad().data();
      T* gx = x_c.grad().data();
      const std::int64_t n = x_c.size();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] * s[i] * (T{1} - s[i]);
    });
  }
  return y;
}

// Affine map: (B,F) x (F,U) + (U).
template <std::floating_point T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                GradTape<T>* tape = nullptr) {
  if (input.rank() != 2) throw ShapeError("dense: input must be rank 2, got " + shape_str(input.dims()));
  if (weight.rank() != 2) throw ShapeError("dense: weight must be rank 2, got " + shape_str(weight.dims()));
  const std::int64_t B = input.dim(0), F = input.dim(1), U = weight.dim(1);
  if (weight.dim(0) != F)
    throw ShapeError("dense: input features " + std::to_string(F) + " vs weight rows " +
                     std::to_string(weight.dim(0)));
  if (bias.rank() != 1 || bias.dim(0) != U)
    throw ShapeError("dense: bias must have shape (" + std::to_string(U) + "), got " +
                     shape_str(bias.dims()));
  Tensor<T> out(Shape{B, U});
  gemm_nn(B, U, F, input.data(), weight.data(), out.data());
  T* o = out.data();
  const T* bv = bias.data();
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t u = 0; u < U; ++u) o[b * U + u] += bv[u];

  const bool need = input.requires_grad() || weight.requires_grad() || bias.requires_grad();
  if (tape && need) {
    out.set_requires_grad(true);
    Tensor<T> in_c = input, w_c = weight, b_c = bias, out_c = out;
    tape->record([in_c, w_c, b_c, out_c, B, F, U]() mutable {
      const T* go = out_c.grad().data();
      if (b_c.requires_grad()) {
        T* gb = b_c.grad().data();
        for (std::int64_t b = 0; b < B; ++b)
          for (std::int64_t u = 0; u < U; ++u) gb[u] += go[b * U + u];
      }
      if (w_c.requires_grad()) gemm_tn(F, U, B, in_c.data(), go, w_c.grad().data(), true);
      if (in_c.requires_grad()) gemm_nt(B, F, U, go, w_c.data(), in_c.grad().data(), true);
    });
  }
  return out;
}

// Inverted dropout: train mode zeroes with probability `rate` and scales
// survivors by 1/(1-rate); inference is the identity. Deterministic per seed.
template <std::floating_point T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Mode mode, std::uint64_t seed,
                  GradTape<T>* tape = nullptr) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  if (mode == Mode::infer || rate == 0.0) return input;

  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::mt19937_64 rng(seed);
  Tensor<T> out(input.dims());
  std::vector<T> mult(static_cast<std::size_t>(input.size()));
  const T* xv = input.data();
  T* yv = out.data();
  const std::int64_t n = input.size();
  for (std::int64_t i = 0; i < n; ++i) {
    mult[i] = rng_unit(rng) < rate ? T{0} : scale;
    yv[i] = xv[i] * mult[i];
  }
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> x_c = input, y_c = out;
    tape->record([x_c, y_c, mult = std::move(mult)]() mutable {
      const T* gy = y_c.grad().data();
      T* gx = x_c.grad().data();
      const std::int64_t n = x_c.size();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] * mult[i];
    });
  }
  return out;
}

// Mean over the spatial axes: (B,H,W,C) -> (B,C) or (H,W,C) -> (C).
template <std::floating_point T>
Tensor<T> global_avg_pool2d(const Tensor<T>& input, GradTape<T>* tape = nullptr) {
  if (input.rank() != 3 && input.rank() != 4)
    throw ShapeError("global_avg_pool2d: input must be rank 3 (H,W,C) or 4 (B,H,W,C), got " +
                     shape_str(input.dims()));
  const bool batched = input.rank() == 4;
  const std::int64_t B = batched ? input.dim(0) : 1;
  const std::int64_t H = input.dim(batched ? 1 : 0);
  const std::int64_t W = input.dim(batched ? 2 : 1);
  const std::int64_t C = input.dim(batched ? 3 : 2);
  const std::int64_t hw = H * W;
  Tensor<T> out(batched ? Shape{B, C} : Shape{C});
  const T* x = input.data();
  T* y = out.data();
  for (std::int64_t b = 0; b < B; ++b) {
    std::vector<double> acc(static_cast<std::size_t>(C), 0.0);
    const T* xb = x + b * hw * C;
    for (std::int64_t s = 0; s < hw; ++s)
      for (std::int64_t c = 0; c < C; ++c) acc[c] += static_cast<double>(xb[s * C + c]);
    for (std::int64_t c = 0; c < C; ++c)
      y[b * C + c] = static_cast<T>(acc[c] / static_cast<double>(hw));
  }
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> x_c = input, y_c = out;
    tape->record([x_c, y_c, B, hw, C]() mutable {
      const T* gy = y_c.grad().data();
      T* gx = x_c.grad().data();
      const T inv = static_cast<T>(1.0 / static_cast<double>(hw));
      for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t s = 0; s < hw; ++s)
          for (std::int64_t c = 0; c < C; ++c)
            gx[(b * hw + s) * C + c] += gy[b * C + c] * inv;
    });
  }
  return out;
}

// Elementwise sum; the residual shortcut. Dims must match exactly.
template <std::floating_point T>
Tensor<T> add_residual(const Tensor<T>& a, const Tensor<T>& b, GradTape<T>* tape = nullptr) {
  if (a.dims() != b.dims())
    throw ShapeError("add_residual: shape mismatch " + shape_str(a.dims()) + " vs " +
                     shape_str(b.dims()) + "; project the shortcut first");
  Tensor<T> out(a.dims());
  const T* av = a.data();
  const T* bv = b.data();
  T* yv = out.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) yv[i] = av[i] + bv[i];
  const bool need = a.requires_grad() || b.requires_grad();
  if (tape && need) {
    out.set_requires_grad(true);
    Tensor<T> a_c = a, b_c = b, y_c = out;
    tape->record([a_c, b_c, y_c]() mutable {
      const T* gy = y_c.grad().data();
      const std::int64_t n = y_c.size();
      if (a_c.requires_grad()) {
        T* ga = a_c.grad().data();
        for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i];
      }
      if (b_c.requires_grad()) {
        T* gb = b_c.grad().data();
        for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i];
      }
    });
  }
  return out;
}

// Same payload values under new dims (copying); gradient passes through.
template <std::floating_point T>
Tensor<T> reshape(const Tensor<T>& x, Shape dims, GradTape<T>* tape = nullptr) {
  if (shape_size(dims) != x.size())
    throw ShapeError("reshape: " + shape_str(x.dims()) + " -> " + shape_str(dims));
  Tensor<T> out = Tensor<T>::from_values(std::move(dims),
                                         std::vector<T>(x.values().begin(), x.values().end()));
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> x_c = x, y_c = out;
    tape->record([x_c, y_c]() mutable {
      const T* gy = y_c.grad().data();
      T* gx = x_c.grad().data();
      const std::int64_t n = x_c.size();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i];
    });
  }
  return out;
}

template <std::floating_point T>
struct L2Term {
  double coeff = 0.0;
  Tensor<T> param;
};

// Mean squared error over all elements plus sum of coeff * ||param||^2 terms.
template <std::floating_point T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target,
                   const std::vector<L2Term<T>>& l2_terms = {}, GradTape<T>* tape = nullptr) {
  if (pred.dims() != target.dims())
    throw ShapeError("mse_loss: prediction " + shape_str(pred.dims()) + " vs target " +
                     shape_str(target.dims()));
  if (pred.size() == 0) throw DataError("mse_loss: empty tensors");
  const std::int64_t n = pred.size();
  const T* pv = pred.data();
  const T* tv = target.data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pv[i]) - static_cast<double>(tv[i]);
    acc += d * d;
  }
  double loss = acc / static_cast<double>(n);
  for (const auto& term : l2_terms) {
    double s = 0.0;
    for (const T v : term.param.values()) s += static_cast<double>(v) * static_cast<double>(v);
    loss += term.coeff * s;
  }
  Tensor<T> out = Tensor<T>::from_values({1}, {static_cast<T>(loss)});

  bool need = pred.requires_grad();
  for (const auto& term : l2_terms) need = need || term.param.requires_grad();
  if (tape && need) {
    out.set_requires_grad(true);
    Tensor<T> p_c = pred, t_c = target, y_c = out;
    auto l2 = l2_terms;
    tape->record([p_c, t_c, y_c, l2]() mutable {
      const T g = y_c.grad()[0];
      const std::int64_t n = p_c.size();
      if (p_c.requires_grad()) {
        const T* pv = p_c.data();
        const T* tv = t_c.data();
        T* gp = p_c.grad().data();
        const T k = g * static_cast<T>(2.0 / static_cast<double>(n));
        for (std::int64_t i = 0; i < n; ++i) gp[i] += k * (pv[i] - tv[i]);
      }
      for (auto& term : l2) {
        if (!term.param.requires_grad()) continue;
        const T k = g * static_cast<T>(2.0 * term.coeff);
        const T* w = term.param.data();
        T* gw = term.param.grad().data();
        const std::int64_t m = term.param.size();
        for (std::int64_t i = 0; i < m; ++i) gw[i] += k * w[i];
      }
    });
  }
  return out;
}

}  // namespace gridcast

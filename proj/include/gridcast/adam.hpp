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
#include <string>
#include <vector>

#include "gridcast/error.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment state for one set of parameters. Moment buffers mirror
// the parameter shapes; t counts completed steps.
template <std::floating_point T>
class AdamState {
 public:
  AdamState() = default;

  AdamState(std::vector<std::pair<std::string, Tensor<T>>> params, AdamConfig cfg = {})
      : cfg_(cfg), params_(std::move(params)) {
    for (auto& [name, p] : params_) {
      m_.emplace_back(p.dims());
      v_.emplace_back(p.dims());
    }
  }

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  // One update using each parameter's accumulated .grad(). The standard
  // recurrence with explicit bias correction:
  //   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
  //   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
  void step() {
    t_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& [name, p] = params_[i];
      auto g = p.grad();
      auto pv = p.values();
      auto mv = m_[i].values();
      auto vv = v_[i].values();
      for (std::size_t j = 0; j < pv.size(); ++j) {
        const double gj = static_cast<double>(g[j]);
        if (std::isnan(gj))
          throw TrainingError("NaN gradient in parameter '" + name + "' at element " +
                              std::to_string(j) + " (step " + std::to_string(t_) + ")");
        const double m = cfg_.beta1 * static_cast<double>(mv[j]) + (1.0 - cfg_.beta1) * gj;
        const double v = cfg_.beta2 * static_cast<double>(vv[j]) + (1.0 - cfg_.beta2) * gj * gj;
        mv[j] = static_cast<T>(m);
        vv[j] = static_cast<T>(v);
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        pv[j] = static_cast<T>(static_cast<double>(pv[j]) -
                               cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  void zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
  }

  const std::vector<std::pair<std::string, Tensor<T>>>& params() const { return params_; }
  const Tensor<T>& moment1(std::size_t i) const { return m_[i]; }
  const Tensor<T>& moment2(std::size_t i) const { return v_[i]; }

 private:
  AdamConfig cfg_;
  std::vector<std::pair<std::string, Tensor<T>>> params_;
  std::vector<Tensor<T>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace gridcast

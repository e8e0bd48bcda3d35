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
#include <functional>
#include <string>
#include <vector>

#include "gridcast/error.hpp"
#include "gridcast/tape.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

struct GradCheckReport {
  double max_rel_deviation = 0.0;
  std::string worst_param;
  std::int64_t worst_index = -1;
  double tape_grad = 0.0;
  double fd_grad = 0.0;
  std::int64_t elements_checked = 0;

  bool within(double tolerance) const { return max_rel_deviation <= tolerance; }
};

// Central finite-difference oracle for reverse-mode gradients, double
// precision only (single precision differences are dominated by rounding).
// The forward callable must be deterministic: dropout in infer mode, a fixed
// batch-norm mode, no RNG consumption. It is invoked with a tape pointer
// (non-null exactly once, for the recorded pass) and must return a scalar
// loss. Relative deviation uses |a-b| / max(|a|,|b|,1e-3) so negligible
// gradients compare on an absolute 1e-3 floor.
inline GradCheckReport grad_check(
    const std::function<Tensor<double>(GradTape<double>*)>& forward,
    std::vector<std::pair<std::string, Tensor<double>>> params, double fd_step = 1e-5) {
  const double l0 = forward(nullptr).scalar();
  const double l1 = forward(nullptr).scalar();
  if (l0 != l1)
    throw OracleError("grad_check: forward is not deterministic (" + std::to_string(l0) +
                      " vs " + std::to_string(l1) + "); fix dropout/batch-norm modes");

  for (auto& [name, p] : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  GradTape<double> tape;
  Tensor<double> loss = forward(&tape);
  tape.backward(loss);

  GradCheckReport report;
  for (auto& [name, p] : params) {
    auto values = p.values();
    auto tape_grad = p.grad();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double orig = values[j];
      values[j] = orig + fd_step;
      const double lp = forward(nullptr).scalar();
      values[j] = orig - fd_step;
      const double lm = forward(nullptr).scalar();
      values[j] = orig;
      const double fd = (lp - lm) / (2.0 * fd_step);
      const double tg = tape_grad[j];
      const double denom = std::max({std::fabs(tg), std::fabs(fd), 1e-3});
      const double dev = std::fabs(tg - fd) / denom;
      ++report.elements_checked;
      if (dev > report.max_rel_deviation) {
        report.max_rel_deviation = dev;
        report.worst_param = name;
        report.worst_index = static_cast<std::int64_t>(j);
        report.tape_grad = tg;
        report.fd_grad = fd;
      }
    }
  }
  return report;
}

}  // namespace gridcast

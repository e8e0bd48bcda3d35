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

#include <concepts>
#include <functional>
#include <utility>
#include <vector>

#include "gridcast/error.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

// Reverse-mode tape. Ops append adjoint closures during the forward pass;
// backward() replays them in reverse, accumulating exactly one gradient
// contribution per recorded use of a tensor. Single-writer: one forward and
// one backward per tape instance.
template <std::floating_point T>
class GradTape {
 public:
  void record(std::function<void()> adjoint) { entries_.push_back(std::move(adjoint)); }

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

  void backward(Tensor<T>& loss) {
    if (consumed_)
      throw TapeUsageError("backward() called twice on the same tape; record a new forward pass");
    if (entries_.empty())
      throw TapeUsageError("backward() on an empty tape; the loss was not produced by a recorded forward pass");
    if (loss.size() != 1)
      throw ShapeError("backward() expects a scalar loss, got " + shape_str(loss.dims()));
    loss.grad()[0] = T{1};
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    consumed_ = true;
  }

  void reset() {
    entries_.clear();
    consumed_ = false;
  }

 private:
  std::vector<std::function<void()>> entries_;
  bool consumed_ = false;
};

}  // namespace gridcast

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
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gridcast/error.hpp"

namespace gridcast {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_size(const Shape& dims) {
  std::int64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

inline std::string shape_str(const Shape& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

// Dense row-major tensor with an optional gradient buffer. Copies share the
// underlying payload (shallow handle); clone() makes a deep copy. Values are
// treated as immutable during a recorded forward/backward pass; the optimizer
// mutates parameter payloads between steps.
template <std::floating_point T>
class Tensor {
 public:
  Tensor() : p_(std::make_shared<Payload>()) {}

  explicit Tensor(Shape dims, T fill = T{0}, bool requires_grad = false)
      : p_(std::make_shared<Payload>()) {
    validate(dims);
    p_->dims = std::move(dims);
    p_->v.assign(static_cast<std::size_t>(shape_size(p_->dims)), fill);
    p_->rg = requires_grad;
  }

  static Tensor from_values(Shape dims, std::vector<T> values, bool requires_grad = false) {
    validate(dims);
    if (shape_size(dims) != static_cast<std::int64_t>(values.size()))
      throw ShapeError("tensor " + shape_str(dims) + " expects " +
                       std::to_string(shape_size(dims)) + " values, got " +
                       std::to_string(values.size()));
    Tensor t;
    t.p_->dims = std::move(dims);
    t.p_->v = std::move(values);
    t.p_->rg = requires_grad;
    return t;
  }

  const Shape& dims() const { return p_->dims; }
  std::int64_t rank() const { return static_cast<std::int64_t>(p_->dims.size()); }
  std::int64_t dim(std::int64_t axis) const { return p_->dims[static_cast<std::size_t>(axis)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(p_->v.size()); }
  bool empty() const { return p_->v.empty(); }

  std::span<T> values() { return p_->v; }
  std::span<const T> values() const { return p_->v; }
  T* data() { return p_->v.data(); }
  const T* data() const { return p_->v.data(); }

  bool requires_grad() const { return p_->rg; }
  void set_requires_grad(bool rg) { p_->rg = rg; }

  // Gradient buffer, zero-initialized on first access.
  std::span<T> grad() {
    if (p_->g.size() != p_->v.size()) p_->g.assign(p_->v.size(), T{0});
    return p_->g;
  }
  std::span<const T> grad() const {
    if (p_->g.size() != p_->v.size()) p_->g.assign(p_->v.size(), T{0});
    return p_->g;
  }
  void zero_grad() {
    if (!p_->g.empty()) std::fill(p_->g.begin(), p_->g.end(), T{0});
  }

  T scalar() const {
    if (size() != 1) throw ShapeError("scalar() on tensor of shape " + shape_str(dims()));
    return p_->v[0];
  }

  // Multi-index accessors; test/debug convenience, not used in hot loops.
  T& at(std::initializer_list<std::int64_t> idx) { return p_->v[flat(idx)]; }
  T at(std::initializer_list<std::int64_t> idx) const { return p_->v[flat(idx)]; }

  Tensor clone() const {
    Tensor t;
    t.p_->dims = p_->dims;
    t.p_->v = p_->v;
    t.p_->rg = p_->rg;
    return t;
  }

  bool shares_payload_with(const Tensor& o) const { return p_ == o.p_; }

 private:
  struct Payload {
    Shape dims;
    std::vector<T> v;
    mutable std::vector<T> g;
    bool rg = false;
  };

  static void validate(const Shape& dims) {
    for (auto d : dims)
      if (d <= 0) throw ShapeError("non-positive extent in shape " + shape_str(dims));
  }

  std::size_t flat(std::initializer_list<std::int64_t> idx) const {
    if (static_cast<std::int64_t>(idx.size()) != rank())
      throw ShapeError("index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                       std::to_string(rank()));
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : idx) {
      const auto extent = p_->dims[axis];
      if (i < 0 || i >= extent)
        throw ShapeError("index " + std::to_string(i) + " out of range for axis " +
                         std::to_string(axis) + " of " + shape_str(dims()));
      off = off * static_cast<std::size_t>(extent) + static_cast<std::size_t>(i);
      ++axis;
    }
    return off;
  }

  std::shared_ptr<Payload> p_;
};

}  // namespace gridcast

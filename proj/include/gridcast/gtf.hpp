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
#include <fstream>
#include <span>
#include <string>

#include "gridcast/tensor.hpp"

namespace gridcast {

// Gridded Tensor File: "GTF1" magic, u8 rank, rank x u32 little-endian
// extents, then IEEE 754 binary32 little-endian payload in row-major order.
// NaN payload values survive round trips bit-exactly.
inline constexpr char kGtfMagic[4] = {'G', 'T', 'F', '1'};
inline constexpr std::int64_t kGtfMaxRank = 8;

void encode_gtf(const Tensor<float>& tensor, const std::filesystem::path& path);
Tensor<float> decode_gtf(const std::filesystem::path& path);

// Reads only the header; cheap shape/consistency probes on large files.
Shape gtf_shape(const std::filesystem::path& path);

// Sequential writer for tensors too large to hold in memory; the leading
// axis is streamed in chunks.
class GtfWriter {
 public:
  GtfWriter(const std::filesystem::path& path, Shape extents);
  ~GtfWriter();

  void append(std::span<const float> values);
  // Validates that exactly product(extents) values were appended.
  void finish();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::int64_t expected_ = 0;
  std::int64_t written_ = 0;
  bool finished_ = false;
};

// Sequential reader mirroring GtfWriter.
class GtfReader {
 public:
  explicit GtfReader(const std::filesystem::path& path);

  const Shape& dims() const { return dims_; }
  std::int64_t remaining() const { return remaining_; }
  void read(std::span<float> out);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  Shape dims_;
  std::int64_t remaining_ = 0;
  std::int64_t payload_offset_ = 0;
};

}  // namespace gridcast

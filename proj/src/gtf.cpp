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

#include "gridcast/gtf.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <vector>

#include "gridcast/error.hpp"

namespace gridcast {

namespace {

constexpr std::int64_t kIoChunk = 1 << 20;  // values per buffered transfer

void pack_u32le(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

std::uint32_t unpack_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void pack_floats_le(std::span<const float> src, unsigned char* dst) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, src.data(), src.size() * sizeof(float));
  } else {
    for (std::size_t i = 0; i < src.size(); ++i)
      pack_u32le(std::bit_cast<std::uint32_t>(src[i]), dst + 4 * i);
  }
}

void unpack_floats_le(const unsigned char* src, std::span<float> dst) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst.data(), src, dst.size() * sizeof(float));
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = std::bit_cast<float>(unpack_u32le(src + 4 * i));
  }
}

void write_header(std::ofstream& out, const std::filesystem::path& path, const Shape& extents) {
  if (extents.size() > static_cast<std::size_t>(kGtfMaxRank))
    throw FormatError("GTF rank " + std::to_string(extents.size()) + " exceeds maximum " +
                          std::to_string(kGtfMaxRank),
                      4);
  std::vector<unsigned char> header(4 + 1 + 4 * extents.size());
  std::memcpy(header.data(), kGtfMagic, 4);
  header[4] = static_cast<unsigned char>(extents.size());
  for (std::size_t i = 0; i < extents.size(); ++i) {
    const std::int64_t e = extents[i];
    if (e <= 0 || e > std::numeric_limits<std::uint32_t>::max())
      throw FormatError("GTF extent " + std::to_string(e) + " on axis " + std::to_string(i) +
                            " does not fit an unsigned 32-bit field",
                        5 + 4 * i);
    pack_u32le(static_cast<std::uint32_t>(e), header.data() + 5 + 4 * i);
  }
  out.write(reinterpret_cast<const char*>(header.data()),
            static_cast<std::streamsize>(header.size()));
  if (!out) throw FormatError("GTF write failed for " + path.string(), 0);
}

struct Header {
  Shape dims;
  std::int64_t payload_offset = 0;
  std::int64_t count = 0;
};

Header read_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char magic[4];
  in.read(reinterpret_cast<char*>(magic), 4);
  if (in.gcount() != 4 || std::memcmp(magic, kGtfMagic, 4) != 0)
    throw FormatError("bad GTF magic in " + path.string(), 0);
  unsigned char rank_byte = 0;
  in.read(reinterpret_cast<char*>(&rank_byte), 1);
  if (in.gcount() != 1) throw FormatError("truncated GTF header in " + path.string(), 4);
  if (rank_byte > kGtfMaxRank)
    throw FormatError("GTF rank " + std::to_string(int(rank_byte)) + " exceeds maximum " +
                          std::to_string(kGtfMaxRank) + " in " + path.string(),
                      4);
  Header h;
  h.count = 1;
  std::vector<unsigned char> ext(4 * static_cast<std::size_t>(rank_byte));
  in.read(reinterpret_cast<char*>(ext.data()), static_cast<std::streamsize>(ext.size()));
  if (in.gcount() != static_cast<std::streamsize>(ext.size()))
    throw FormatError("truncated GTF extents in " + path.string(), 5);
  for (std::size_t i = 0; i < rank_byte; ++i) {
    const std::uint32_t e = unpack_u32le(ext.data() + 4 * i);
    if (e == 0)
      throw FormatError("zero GTF extent on axis " + std::to_string(i) + " in " + path.string(),
                        5 + 4 * i);
    if (h.count > (std::int64_t{1} << 42) / e)
      throw FormatError("GTF extent product overflows sanity bound in " + path.string(),
                        5 + 4 * i);
    h.count *= e;
    h.dims.push_back(static_cast<std::int64_t>(e));
  }
  h.payload_offset = 5 + 4 * static_cast<std::int64_t>(rank_byte);
  return h;
}

}  // namespace

void encode_gtf(const Tensor<float>& tensor, const std::filesystem::path& path) {
  GtfWriter writer(path, tensor.dims());
  writer.append(tensor.values());
  writer.finish();
}

Tensor<float> decode_gtf(const std::filesystem::path& path) {
  GtfReader reader(path);
  std::vector<float> values(static_cast<std::size_t>(reader.remaining()));
  reader.read(values);
  return Tensor<float>::from_values(reader.dims(), std::move(values));
}

Shape gtf_shape(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open GTF file " + path.string(), 0);
  return read_header(in, path).dims;
}

GtfWriter::GtfWriter(const std::filesystem::path& path, Shape extents)
    : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw FormatError("cannot create GTF file " + path.string(), 0);
  write_header(out_, path_, extents);
  expected_ = shape_size(extents);
}

GtfWriter::~GtfWriter() = default;

void GtfWriter::append(std::span<const float> values) {
  if (finished_) throw FormatError("append after finish on " + path_.string(), 0);
  if (written_ + static_cast<std::int64_t>(values.size()) > expected_)
    throw FormatError("GTF payload overflow: writing past " + std::to_string(expected_) +
                          " declared values in " + path_.string(),
                      0);
  std::vector<unsigned char> buf;
  std::size_t done = 0;
  while (done < values.size()) {
    const std::size_t n = std::min<std::size_t>(values.size() - done, kIoChunk);
    buf.resize(4 * n);
    pack_floats_le(values.subspan(done, n), buf.data());
    out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out_) throw FormatError("GTF write failed for " + path_.string(), 0);
    done += n;
  }
  written_ += static_cast<std::int64_t>(values.size());
}

void GtfWriter::finish() {
  if (finished_) return;
  if (written_ != expected_)
    throw FormatError("GTF payload incomplete: " + std::to_string(written_) + " of " +
                          std::to_string(expected_) + " values written to " + path_.string(),
                      0);
  out_.flush();
  if (!out_) throw FormatError("GTF flush failed for " + path_.string(), 0);
  finished_ = true;
}

GtfReader::GtfReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw FormatError("cannot open GTF file " + path.string(), 0);
  const Header h = read_header(in_, path_);
  dims_ = h.dims;
  remaining_ = h.count;
  payload_offset_ = h.payload_offset;
  // The payload must be exactly 4 * product(extents) bytes.
  in_.seekg(0, std::ios::end);
  const std::int64_t file_size = static_cast<std::int64_t>(in_.tellg());
  const std::int64_t expect = payload_offset_ + 4 * h.count;
  if (file_size < expect)
    throw FormatError("truncated GTF payload in " + path.string() + ": file has " +
                          std::to_string(file_size) + " bytes, need " + std::to_string(expect),
                      static_cast<std::size_t>(file_size));
  if (file_size > expect)
    throw FormatError("trailing bytes after GTF payload in " + path.string(),
                      static_cast<std::size_t>(expect));
  in_.seekg(payload_offset_);
}

void GtfReader::read(std::span<float> out) {
  if (static_cast<std::int64_t>(out.size()) > remaining_)
    throw FormatError("GTF read past payload end in " + path_.string(),
                      static_cast<std::size_t>(payload_offset_));
  std::vector<unsigned char> buf;
  std::size_t done = 0;
  while (done < out.size()) {
    const std::size_t n = std::min<std::size_t>(out.size() - done, kIoChunk);
    buf.resize(4 * n);
    in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in_.gcount() != static_cast<std::streamsize>(buf.size()))
      throw FormatError("GTF read failed in " + path_.string(), 0);
    unpack_floats_le(buf.data(), out.subspan(done, n));
    done += n;
  }
  remaining_ -= static_cast<std::int64_t>(out.size());
}

}  // namespace gridcast

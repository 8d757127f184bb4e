// Copyright (c) 2026 The fewer authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// FEW1 feature files: frame- or token-level embeddings of one utterance or
// hypothesis.
//
//   offset 0   4 bytes   magic "FEW1"
//   offset 4   u32 LE    dim
//   offset 8   u32 LE    frames
//   offset 12  frames*dim float32 LE, row-major
//
// No padding and no checksum; the file length must be exactly
// 12 + 4*frames*dim.

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "fewer/error.hpp"
#include "fewer/tensor.hpp"

namespace fewer {

inline constexpr std::array<char, 4> kFeatureMagic{'F', 'E', 'W', '1'};
inline constexpr std::size_t kFeatureHeaderBytes = 12;

struct FeatureSequence {
  std::uint32_t dim = 0;
  std::uint32_t frames = 0;
  std::vector<float> values;  // frames × dim, row-major

  FeatureSequence() = default;
  FeatureSequence(std::uint32_t d, std::uint32_t t, std::vector<float> v)
      : dim(d), frames(t), values(std::move(v)) {}

  /// Throws DataError unless frames ≥ 1, dim ≥ 1, the payload size matches
  /// and every value is finite.
  void validate() const {
    if (frames == 0) throw DataError("feature sequence has no frames");
    if (dim == 0) throw DataError("feature sequence has zero dimension");
    if (values.size() != static_cast<std::size_t>(frames) * dim) {
      throw DataError("feature payload has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(frames) + "x" +
                      std::to_string(dim));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw DataError("non-finite feature value at index " + std::to_string(i));
      }
    }
  }

  /// Widens to a frames×dim tensor of doubles.
  Tensor to_tensor() const {
    return Tensor(frames, dim, std::vector<double>(values.begin(), values.end()));
  }

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;
};

struct FeatureHeader {
  std::uint32_t dim = 0;
  std::uint32_t frames = 0;
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace detail

inline std::vector<unsigned char> encode_features(const FeatureSequence& seq) {
  seq.validate();
  std::vector<unsigned char> out;
  out.reserve(kFeatureHeaderBytes + seq.values.size() * 4);
  out.insert(out.end(), kFeatureMagic.begin(), kFeatureMagic.end());
  detail::put_u32(out, seq.dim);
  detail::put_u32(out, seq.frames);
  for (float v : seq.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

/// Parses and checks the 12-byte header against the buffer length.
inline FeatureHeader parse_feature_header(std::span<const unsigned char> bytes,
                                          const std::string& source = "<buffer>") {
  if (bytes.size() < kFeatureHeaderBytes) {
    throw FormatError(source + ": truncated header at byte offset " +
                      std::to_string(bytes.size()) + " (need 12 bytes)");
  }
  if (!std::equal(kFeatureMagic.begin(), kFeatureMagic.end(), bytes.begin())) {
    throw FormatError(source + ": bad magic at byte offset 0 (expected FEW1)");
  }
  FeatureHeader h{detail::get_u32(bytes.data() + 4), detail::get_u32(bytes.data() + 8)};
  if (h.dim == 0) throw FormatError(source + ": zero dim at byte offset 4");
  if (h.frames == 0) throw FormatError(source + ": zero frames at byte offset 8");
  const std::uint64_t expected =
      kFeatureHeaderBytes + 4ull * static_cast<std::uint64_t>(h.dim) * h.frames;
  if (bytes.size() < expected) {
    throw FormatError(source + ": truncated payload at byte offset " +
                      std::to_string(bytes.size()) + ", expected " +
                      std::to_string(expected) + " bytes for " +
                      std::to_string(h.frames) + "x" + std::to_string(h.dim));
  }
  if (bytes.size() > expected) {
    throw FormatError(source + ": dim/frames mismatch, trailing data at byte offset " +
                      std::to_string(expected));
  }
  return h;
}

inline FeatureSequence decode_features(std::span<const unsigned char> bytes,
                                       const std::string& source = "<buffer>") {
  const FeatureHeader h = parse_feature_header(bytes, source);
  FeatureSequence seq;
  seq.dim = h.dim;
  seq.frames = h.frames;
  seq.values.resize(static_cast<std::size_t>(h.dim) * h.frames);
  const unsigned char* p = bytes.data() + kFeatureHeaderBytes;
  for (std::size_t i = 0; i < seq.values.size(); ++i, p += 4) {
    seq.values[i] = std::bit_cast<float>(detail::get_u32(p));
    if (!std::isfinite(seq.values[i])) {
      throw FormatError(source + ": non-finite value at byte offset " +
                        std::to_string(kFeatureHeaderBytes + 4 * i));
    }
  }
  return seq;
}

inline void write_features(const FeatureSequence& seq, const std::filesystem::path& path) {
  const auto bytes = encode_features(seq);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

inline FeatureSequence read_features(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return decode_features(bytes, path.string());
}

/// Full structural check of a feature file, as used on files produced by
/// external extractors. Returns the header on success.
inline FeatureHeader validate_feature_file(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  decode_features(bytes, path.string());
  return parse_feature_header(bytes, path.string());
}

}  // namespace fewer

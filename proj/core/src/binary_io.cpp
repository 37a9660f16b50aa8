// Copyright 2026 The hrtfkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hrtfkit/binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hrtfkit/error.hpp"

namespace hrtfkit {
namespace {

float from_le(std::uint32_t raw) {
  if constexpr (std::endian::native == std::endian::big) {
    raw = ((raw & 0xffu) << 24) | ((raw & 0xff00u) << 8) | ((raw >> 8) & 0xff00u) |
          (raw >> 24);
  }
  return std::bit_cast<float>(raw);
}

std::uint32_t to_le(float value) {
  auto raw = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) {
    raw = ((raw & 0xffu) << 24) | ((raw & 0xff00u) << 8) | ((raw >> 8) & 0xff00u) |
          (raw >> 24);
  }
  return raw;
}

}  // namespace

std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes % 4 != 0) {
    throw ValidationError(path.string() + ": size " + std::to_string(bytes) +
                          " bytes is not a multiple of 4 (truncated at offset " +
                          std::to_string(bytes - bytes % 4) + ")");
  }
  const std::size_t count = bytes / 4;
  if (expected_count != 0 && count != expected_count) {
    throw ValidationError(path.string() + ": expected " + std::to_string(expected_count) +
                          " float32 values, found " + std::to_string(count) +
                          " (shape mismatch at offset " +
                          std::to_string(std::min(count, expected_count) * 4) + ")");
  }
  std::vector<std::uint32_t> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw ValidationError("short read from " + path.string());
  std::vector<float> out(count);
  std::transform(raw.begin(), raw.end(), out.begin(), from_le);
  return out;
}

void write_f32(const std::filesystem::path& path, std::span<const float> values) {
  std::vector<std::uint32_t> raw(values.size());
  std::transform(values.begin(), values.end(), raw.begin(), to_le);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * 4));
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<double> read_f32_as_double(const std::filesystem::path& path,
                                       std::size_t expected_count) {
  const auto values = read_f32(path, expected_count);
  return {values.begin(), values.end()};
}

void write_f32_from_double(const std::filesystem::path& path, std::span<const double> values) {
  std::vector<float> narrowed(values.size());
  std::transform(values.begin(), values.end(), narrowed.begin(),
                 [](double v) { return static_cast<float>(v); });
  write_f32(path, narrowed);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace hrtfkit

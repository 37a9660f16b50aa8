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

#ifndef HRTFKIT_BINARY_IO_HPP_
#define HRTFKIT_BINARY_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hrtfkit {

// Raw little-endian IEEE-754 float32 blobs. Reads validate the element count
// when `expected_count` is nonzero and report the offending file.
std::vector<float> read_f32(const std::filesystem::path& path,
                            std::size_t expected_count = 0);
void write_f32(const std::filesystem::path& path, std::span<const float> values);

// Convenience for double-precision data stored as float32.
std::vector<double> read_f32_as_double(const std::filesystem::path& path,
                                       std::size_t expected_count = 0);
void write_f32_from_double(const std::filesystem::path& path,
                           std::span<const double> values);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hrtfkit

#endif  // HRTFKIT_BINARY_IO_HPP_

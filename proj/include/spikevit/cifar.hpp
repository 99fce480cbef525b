// Copyright 2026 The spikevit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spikevit/tensor.hpp"

namespace spikevit {

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarPixels;

// One binary-batch record: label byte, then the R, G and B planes row-major.
struct CifarRecord {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kCifarPixels> pixels{};
};

// InputError unless the size is a whole number of records (and equals
// `expected_records` when given) and every label is below 10.
std::vector<CifarRecord> parse_cifar10(std::span<const std::uint8_t> bytes,
                                       std::optional<std::size_t> expected_records = {});
std::vector<CifarRecord> read_cifar10(const std::filesystem::path& path,
                                      std::optional<std::size_t> expected_records = {});

// (1, B, size, size, 3) tensor of pixels / 255, resized by nearest
// neighbour: output pixel (y, x) takes source (y * 32 / size, x * 32 / size).
DenseTensor cifar_to_input(std::span<const CifarRecord> records, std::size_t size);

}  // namespace spikevit

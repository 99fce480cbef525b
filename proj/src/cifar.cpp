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

#include "spikevit/cifar.hpp"

#include <fstream>
#include <iterator>
#include <string>

namespace spikevit {

std::vector<CifarRecord> parse_cifar10(std::span<const std::uint8_t> bytes,
                                       std::optional<std::size_t> expected_records) {
  if (bytes.empty()) throw InputError("CIFAR-10 batch is empty");
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw InputError("CIFAR-10 batch size " + std::to_string(bytes.size()) +
                     " is not a multiple of the " + std::to_string(kCifarRecordBytes) +
                     "-byte record");
  }
  const std::size_t count = bytes.size() / kCifarRecordBytes;
  if (expected_records && count != *expected_records) {
    throw InputError("CIFAR-10 batch holds " + std::to_string(count) + " records, expected " +
                     std::to_string(*expected_records));
  }
  std::vector<CifarRecord> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* r = bytes.data() + i * kCifarRecordBytes;
    if (r[0] > 9) {
      throw InputError("record " + std::to_string(i) + " has label " + std::to_string(r[0]));
    }
    out[i].label = r[0];
    std::copy(r + 1, r + kCifarRecordBytes, out[i].pixels.begin());
  }
  return out;
}

std::vector<CifarRecord> read_cifar10(const std::filesystem::path& path,
                                      std::optional<std::size_t> expected_records) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open CIFAR-10 batch " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_cifar10(bytes, expected_records);
}

DenseTensor cifar_to_input(std::span<const CifarRecord> records, std::size_t size) {
  if (records.empty()) throw InputError("no CIFAR-10 records selected");
  if (size == 0) throw InputError("input size must be positive");
  DenseTensor x(TensorShape{1, records.size(), size, size, 3});
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  for (std::size_t b = 0; b < records.size(); ++b)
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t xx = 0; xx < size; ++xx) {
        const std::size_t sy = y * kCifarSide / size;
        const std::size_t sx = xx * kCifarSide / size;
        for (std::size_t c = 0; c < 3; ++c) {
          x.at(0, b, y, xx, c) = records[b].pixels[c * plane + sy * kCifarSide + sx] / 255.0;
        }
      }
  return x;
}

}  // namespace spikevit

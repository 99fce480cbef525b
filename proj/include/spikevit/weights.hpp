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

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace spikevit {

// GSTW layout (little endian):
//   "GSTW" | u16 version | u32 entry count
//   per entry: u16 name length | name | u8 dtype | u8 rank | u32 dims[rank] | payload
// Entries are written in name order, so equal containers serialize to equal
// bytes. Names starting with "meta/" hold metadata.
inline constexpr std::uint16_t kWeightFormatVersion = 1;

enum class DType : std::uint8_t { f32 = 1, f64 = 2, u32 = 3 };

struct WeightEntry {
  std::vector<std::uint32_t> dims;
  std::variant<std::vector<float>, std::vector<double>, std::vector<std::uint32_t>> values;

  DType dtype() const;
  std::size_t element_count() const;

  static WeightEntry f32(std::vector<std::uint32_t> dims, std::vector<float> v);
  static WeightEntry f64(std::vector<double> v);
  static WeightEntry u32(std::vector<std::uint32_t> v);
};

class WeightContainer {
 public:
  void put(std::string name, WeightEntry entry);
  bool contains(std::string_view name) const;
  // MissingEntryError when absent.
  const WeightEntry& get(std::string_view name) const;
  const std::map<std::string, WeightEntry, std::less<>>& entries() const { return entries_; }

  std::vector<std::uint8_t> serialize() const;
  // Parses the whole buffer; nothing is returned on error.
  static WeightContainer parse(std::span<const std::uint8_t> bytes);

 private:
  std::map<std::string, WeightEntry, std::less<>> entries_;
};

// Writes to a temporary sibling and renames on success.
void save_weights(const WeightContainer& weights, const std::filesystem::path& path);
WeightContainer load_weights(const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace spikevit

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

#include "spikevit/weights.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "spikevit/errors.hpp"

namespace spikevit {

DType WeightEntry::dtype() const {
  switch (values.index()) {
    case 0:
      return DType::f32;
    case 1:
      return DType::f64;
    default:
      return DType::u32;
  }
}

std::size_t WeightEntry::element_count() const {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

WeightEntry WeightEntry::f32(std::vector<std::uint32_t> dims, std::vector<float> v) {
  return WeightEntry{std::move(dims), std::move(v)};
}

WeightEntry WeightEntry::f64(std::vector<double> v) {
  const auto n = static_cast<std::uint32_t>(v.size());
  return WeightEntry{{n}, std::move(v)};
}

WeightEntry WeightEntry::u32(std::vector<std::uint32_t> v) {
  const auto n = static_cast<std::uint32_t>(v.size());
  return WeightEntry{{n}, std::move(v)};
}

void WeightContainer::put(std::string name, WeightEntry entry) {
  if (name.empty() || name.size() > 0xFFFF) throw ArgumentError("invalid entry name length");
  std::size_t expect = 1;
  for (auto d : entry.dims) expect *= d;
  if (entry.dims.size() > 255 || expect != entry.element_count()) {
    throw ShapeMismatchError("entry '" + name + "' dims do not match its element count");
  }
  entries_.insert_or_assign(std::move(name), std::move(entry));
}

bool WeightContainer::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

const WeightEntry& WeightContainer::get(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw MissingEntryError("missing entry '" + std::string(name) + "'");
  return it->second;
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  void need(std::size_t n, const char* what) {
    if (bytes.size() - pos < n) {
      throw TruncatedFileError(std::string("weight file truncated while reading ") + what);
    }
  }
  std::uint64_t le(std::size_t n, const char* what) {
    need(n, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t{bytes[pos + i]} << (8 * i);
    pos += n;
    return v;
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

std::size_t dtype_size(DType d) { return d == DType::f64 ? 8 : 4; }

}  // namespace

std::vector<std::uint8_t> WeightContainer::serialize() const {
  Writer w;
  for (char c : std::string_view("GSTW")) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kWeightFormatVersion);
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    for (char c : name) w.u8(static_cast<std::uint8_t>(c));
    w.u8(static_cast<std::uint8_t>(e.dtype()));
    w.u8(static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) w.u32(d);
    std::visit(
        [&](const auto& v) {
          using T = typename std::decay_t<decltype(v)>::value_type;
          for (T x : v) {
            if constexpr (std::is_same_v<T, float>) w.u32(std::bit_cast<std::uint32_t>(x));
            else if constexpr (std::is_same_v<T, double>) w.u64(std::bit_cast<std::uint64_t>(x));
            else w.u32(x);
          }
        },
        e.values);
  }
  return std::move(w.out);
}

WeightContainer WeightContainer::parse(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "GSTW") {
    throw BadMagicError("not a GSTW weight file (bad magic)");
  }
  r.pos = 4;
  const auto version = static_cast<std::uint16_t>(r.le(2, "version"));
  if (version != kWeightFormatVersion) {
    throw VersionError("unsupported weight file version " + std::to_string(version));
  }
  const auto count = static_cast<std::uint32_t>(r.le(4, "entry count"));
  WeightContainer out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = static_cast<std::size_t>(r.le(2, "entry name length"));
    r.need(len, "entry name");
    std::string name(reinterpret_cast<const char*>(bytes.data() + r.pos), len);
    r.pos += len;
    const auto tag = static_cast<std::uint8_t>(r.le(1, "dtype"));
    if (tag < 1 || tag > 3) {
      throw WeightFileError("entry '" + name + "' has unknown dtype tag " + std::to_string(tag));
    }
    const auto dtype = static_cast<DType>(tag);
    const auto rank = static_cast<std::size_t>(r.le(1, "rank"));
    WeightEntry e;
    std::uint64_t elements = 1;
    for (std::size_t d = 0; d < rank; ++d) {
      e.dims.push_back(static_cast<std::uint32_t>(r.le(4, "dims")));
      elements *= e.dims.back();
    }
    if (elements > (bytes.size() - r.pos) / dtype_size(dtype)) {
      throw TruncatedFileError("weight file truncated in payload of '" + name + "'");
    }
    const auto n = static_cast<std::size_t>(elements);
    if (dtype == DType::f32) {
      std::vector<float> v(n);
      for (auto& x : v) x = std::bit_cast<float>(static_cast<std::uint32_t>(r.le(4, "payload")));
      e.values = std::move(v);
    } else if (dtype == DType::f64) {
      std::vector<double> v(n);
      for (auto& x : v) x = std::bit_cast<double>(r.le(8, "payload"));
      e.values = std::move(v);
    } else {
      std::vector<std::uint32_t> v(n);
      for (auto& x : v) x = static_cast<std::uint32_t>(r.le(4, "payload"));
      e.values = std::move(v);
    }
    if (out.contains(name)) throw WeightFileError("duplicate entry '" + name + "'");
    out.entries_.emplace(std::move(name), std::move(e));
  }
  if (r.pos != bytes.size()) throw WeightFileError("trailing bytes after the last entry");
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
      f.close();
      std::filesystem::remove(tmp);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void save_weights(const WeightContainer& weights, const std::filesystem::path& path) {
  const auto bytes = weights.serialize();
  write_file_atomic(path, bytes);
}

WeightContainer load_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open weight file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return WeightContainer::parse(bytes);
}

}  // namespace spikevit

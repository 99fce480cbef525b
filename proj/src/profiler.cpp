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

#include "spikevit/profiler.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "spikevit/errors.hpp"

namespace spikevit {

const ModuleEntry* ProfileReport::find(std::string_view stage, int block,
                                       std::string_view kind) const {
  for (const auto& m : modules)
    if (m.stage == stage && m.block == block && m.kind == kind) return &m;
  return nullptr;
}

ModuleRecord& Profiler::enter(std::string_view stage, int block, std::string_view kind) {
  for (auto& r : records_) {
    if (r.stage == stage && r.block == block && r.kind == kind) {
      active_ = &r;
      return r;
    }
  }
  auto& r = records_.emplace_back();
  r.stage = std::string(stage);
  r.block = block;
  r.kind = std::string(kind);
  active_ = &r;
  return r;
}

ProfileReport Profiler::report() const {
  ProfileReport rep;
  for (const auto& r : records_) {
    ModuleEntry e;
    e.stage = r.stage;
    e.block = r.block;
    e.kind = r.kind;
    e.sops = r.counters.sops.load();
    e.macs = r.counters.macs.load();
    e.comparisons = r.counters.comparisons.load();
    e.multiplies = r.counters.multiplies.load();
    e.score_sops = r.counters.score_sops.load();
    e.value_sops = r.counters.value_sops.load();
    e.sop_upper_bound = r.sop_upper_bound;
    e.firing_rate = r.rate_layers ? r.rate_sum / static_cast<double>(r.rate_layers) : 0.0;
    e.energy_mj = energy_mj(static_cast<double>(e.sops), static_cast<double>(e.macs));
    rep.total_sops += e.sops;
    rep.total_macs += e.macs;
    rep.total_sop_upper_bound += e.sop_upper_bound;
    if (e.kind == "stem") rep.stem_macs += e.macs;
    rep.modules.push_back(std::move(e));
  }
  rep.energy_mj = energy_mj(static_cast<double>(rep.total_sops), static_cast<double>(rep.total_macs));
  rep.energy_mj_without_stem = energy_mj(static_cast<double>(rep.total_sops),
                                         static_cast<double>(rep.total_macs - rep.stem_macs));
  return rep;
}

std::uint64_t count_layer_sops(std::uint64_t spike_count, std::uint64_t fan_out) {
  return spike_count * fan_out;
}

double energy_mj(double sops, double macs) {
  // joules -> millijoules
  return (sops * kEnergyPerSop + macs * kEnergyPerMac) * 1e3;
}

BoundKind parse_bound_kind(std::string_view name) {
  if (name == "attention_score") return BoundKind::attention_score;
  if (name == "attention_value") return BoundKind::attention_value;
  if (name == "ffn") return BoundKind::ffn;
  if (name == "pointwise") return BoundKind::pointwise;
  if (name == "conv") return BoundKind::conv;
  if (name == "depthwise") return BoundKind::depthwise;
  throw ArgumentError("unknown module kind '" + std::string(name) + "'");
}

std::size_t spikes_per_neuron(std::size_t time_steps, std::size_t temporal_group_size) {
  if (temporal_group_size == 0) throw ArgumentError("temporal group size must be positive");
  return (time_steps + temporal_group_size - 1) / temporal_group_size;
}

namespace {

// Number of (input, output) index pairs along one axis that a kernel of size
// k, stride s and padding p connects.
std::uint64_t axis_pairs(std::size_t in, std::size_t k, std::size_t s, std::size_t p) {
  const std::size_t out = (in + 2 * p - k) / s + 1;
  std::uint64_t pairs = 0;
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t j = 0; j < k; ++j) {
      const long long i = static_cast<long long>(o * s + j) - static_cast<long long>(p);
      if (i >= 0 && i < static_cast<long long>(in)) ++pairs;
    }
  }
  return pairs;
}

}  // namespace

std::uint64_t sop_upper_bound(BoundKind kind, const BoundQuery& q) {
  const std::uint64_t n = q.max_spikes;
  const std::uint64_t B = q.input.b;
  const std::uint64_t N = q.input.h * q.input.w;
  const std::uint64_t C = q.input.c;
  switch (kind) {
    case BoundKind::attention_score:
    case BoundKind::attention_value: {
      if (q.spatial_groups == 0 || N % q.spatial_groups != 0) {
        throw ArgumentError("token count is not divisible by the spatial group count");
      }
      return n * B * N * (N / q.spatial_groups) * C;
    }
    case BoundKind::ffn:
      return n * B * N * C * static_cast<std::uint64_t>(std::llround(q.ratio * static_cast<double>(C)));
    case BoundKind::pointwise:
      return n * B * N * C * q.out_channels;
    case BoundKind::conv:
    case BoundKind::depthwise: {
      if (q.kernel == 0 || q.stride == 0 || q.input.h + 2 * q.padding < q.kernel ||
          q.input.w + 2 * q.padding < q.kernel) {
        throw ArgumentError("kernel does not fit the input");
      }
      const std::uint64_t pairs = axis_pairs(q.input.h, q.kernel, q.stride, q.padding) *
                                  axis_pairs(q.input.w, q.kernel, q.stride, q.padding);
      return kind == BoundKind::conv ? n * B * pairs * C * q.out_channels : n * B * pairs * C;
    }
  }
  throw ArgumentError("unknown module kind");
}

std::string format_report_csv(const ProfileReport& report) {
  std::string out = "stage,block_index,module_kind,sops,sop_upper_bound,macs,firing_rate,energy_mJ\n";
  char buf[512];
  for (const auto& m : report.modules) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%llu,%llu,%llu,%.6f,%.9f\n", m.stage.c_str(), m.block,
                  m.kind.c_str(), static_cast<unsigned long long>(m.sops),
                  static_cast<unsigned long long>(m.sop_upper_bound),
                  static_cast<unsigned long long>(m.macs), m.firing_rate, m.energy_mj);
    out += buf;
  }
  return out;
}

void emit_report(const ProfileReport& report, const std::filesystem::path& path) {
  const std::string text = format_report_csv(report);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move report into place at " + path.string() + ": " + ec.message());
  }
}

}  // namespace spikevit

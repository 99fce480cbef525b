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

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spikevit/tensor.hpp"

namespace spikevit {

// Energy per accumulate (spiking layers) and per multiply-accumulate (dense
// layers), in joules.
inline constexpr double kEnergyPerSop = 0.9e-12;
inline constexpr double kEnergyPerMac = 4.6e-12;

// Integer tallies shared by the kernels of one module. Additions are atomic
// and order independent, so totals do not depend on the thread count.
struct OpCounters {
  std::atomic<std::uint64_t> sops{0};
  std::atomic<std::uint64_t> macs{0};
  std::atomic<std::uint64_t> comparisons{0};
  std::atomic<std::uint64_t> multiplies{0};  // general multiplies on activations
  std::atomic<std::uint64_t> score_sops{0};
  std::atomic<std::uint64_t> value_sops{0};
};

struct ModuleRecord {
  std::string stage;
  int block = 0;
  std::string kind;
  OpCounters counters;
  std::uint64_t sop_upper_bound = 0;
  double rate_sum = 0.0;  // sum of per-layer firing rates
  std::size_t rate_layers = 0;
};

struct ModuleEntry {
  std::string stage;
  int block = 0;
  std::string kind;
  std::uint64_t sops = 0;
  std::uint64_t sop_upper_bound = 0;
  std::uint64_t macs = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t multiplies = 0;
  std::uint64_t score_sops = 0;
  std::uint64_t value_sops = 0;
  double firing_rate = 0.0;
  double energy_mj = 0.0;
};

struct ProfileReport {
  std::vector<ModuleEntry> modules;
  std::uint64_t total_sops = 0;
  std::uint64_t total_macs = 0;
  std::uint64_t total_sop_upper_bound = 0;
  std::uint64_t stem_macs = 0;
  double energy_mj = 0.0;
  double energy_mj_without_stem = 0.0;

  const ModuleEntry* find(std::string_view stage, int block, std::string_view kind) const;
};

class Profiler {
 public:
  // Makes (stage, block, kind) the active module, creating it on first use.
  ModuleRecord& enter(std::string_view stage, int block, std::string_view kind);
  ModuleRecord* active() const { return active_; }
  void set_active(ModuleRecord* record) { active_ = record; }
  ProfileReport report() const;

 private:
  std::deque<ModuleRecord> records_;
  ModuleRecord* active_ = nullptr;
};

std::uint64_t count_layer_sops(std::uint64_t spike_count, std::uint64_t fan_out);
double energy_mj(double sops, double macs);

enum class BoundKind { attention_score, attention_value, ffn, pointwise, conv, depthwise };

// Throws ArgumentError for an unknown module kind.
BoundKind parse_bound_kind(std::string_view name);

// Dense-spike worst case of one spike-consuming operation.
struct BoundQuery {
  TensorShape input;               // spiking input, (T, B, H, W, C)
  std::size_t max_spikes = 1;      // spikes per neuron: ceil(T / |G_T|)
  std::size_t spatial_groups = 1;  // |G_S|
  std::size_t out_channels = 0;    // pointwise / conv
  double ratio = 1.0;              // ffn expansion R
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// Spikes per neuron allowed by contiguous temporal groups of size |G_T|.
std::size_t spikes_per_neuron(std::size_t time_steps, std::size_t temporal_group_size);

// attention_score / attention_value: n * B * N * (N / |G_S|) * C
// ffn (one linear layer):            n * B * N * C * (R * C)
// pointwise:                         n * B * N * C * C_out
// conv:                              n * B * P * C * C_out
// depthwise:                         n * B * P * C
// where n = max_spikes, N = H * W and P counts the valid (input, output)
// position pairs of the strided, padded kernel.
std::uint64_t sop_upper_bound(BoundKind kind, const BoundQuery& query);

std::string format_report_csv(const ProfileReport& report);
// Writes to a temporary sibling and renames on success.
void emit_report(const ProfileReport& report, const std::filesystem::path& path);

}  // namespace spikevit

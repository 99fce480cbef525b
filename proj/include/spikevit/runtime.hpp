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
#include <string_view>

#include "spikevit/exp_coding.hpp"
#include "spikevit/profiler.hpp"
#include "spikevit/tensor.hpp"

namespace spikevit {

// Execution settings threaded through every kernel of a forward pass.
struct ForwardContext {
  int threads = 1;
  Profiler* profiler = nullptr;
  bool saturate = false;      // every spiking layer emits its densest pattern
  bool check_spikes = false;  // validate spike amplitudes after each layer

  // Counters of the active profiler module, or nullptr.
  OpCounters* counters() const;
  void add_bound(std::uint64_t sops) const;
  void add_firing(const FireStats& stats) const;
};

// Makes a profiler module active for its lifetime and restores the previous
// one afterwards. No-op without a profiler.
class ModuleScope {
 public:
  ModuleScope(const ForwardContext& ctx, std::string_view stage, int block, std::string_view kind);
  ~ModuleScope();
  ModuleScope(const ModuleScope&) = delete;
  ModuleScope& operator=(const ModuleScope&) = delete;

 private:
  Profiler* profiler_;
  ModuleRecord* previous_;
};

// Spiking layer: the neuron integrates input_gain * current. Records the
// comparisons and firing rate on the active module.
SpikeTensor fire_layer(const DenseTensor& current, const ExpLevelSet& ls, const ForwardContext& ctx,
                       double input_gain = 1.0);

void add_ops(OpCounters* counters, std::uint64_t sops, std::uint64_t macs = 0,
             std::uint64_t multiplies = 0);

}  // namespace spikevit

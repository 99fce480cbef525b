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

#include "spikevit/runtime.hpp"

namespace spikevit {

OpCounters* ForwardContext::counters() const {
  if (!profiler || !profiler->active()) return nullptr;
  return &profiler->active()->counters;
}

void ForwardContext::add_bound(std::uint64_t sops) const {
  if (profiler && profiler->active()) profiler->active()->sop_upper_bound += sops;
}

void ForwardContext::add_firing(const FireStats& stats) const {
  if (!profiler || !profiler->active()) return;
  ModuleRecord& r = *profiler->active();
  r.counters.comparisons += stats.comparisons;
  if (stats.slots > 0) {
    r.rate_sum += static_cast<double>(stats.nonzero) / static_cast<double>(stats.slots);
    ++r.rate_layers;
  }
}

ModuleScope::ModuleScope(const ForwardContext& ctx, std::string_view stage, int block,
                         std::string_view kind)
    : profiler_(ctx.profiler), previous_(ctx.profiler ? ctx.profiler->active() : nullptr) {
  if (profiler_) profiler_->enter(stage, block, kind);
}

ModuleScope::~ModuleScope() {
  if (profiler_) profiler_->set_active(previous_);
}

SpikeTensor fire_layer(const DenseTensor& current, const ExpLevelSet& ls, const ForwardContext& ctx,
                       double input_gain) {
  FireOptions opt;
  opt.input_gain = input_gain;
  opt.saturate = ctx.saturate;
  opt.threads = ctx.threads;
  FireStats stats;
  SpikeTensor s = fire(current, ls, opt, &stats);
  ctx.add_firing(stats);
  if (ctx.check_spikes) s.check_amplitudes();
  return s;
}

void add_ops(OpCounters* counters, std::uint64_t sops, std::uint64_t macs,
             std::uint64_t multiplies) {
  if (!counters) return;
  if (sops) counters->sops += sops;
  if (macs) counters->macs += macs;
  if (multiplies) counters->multiplies += multiplies;
}

}  // namespace spikevit

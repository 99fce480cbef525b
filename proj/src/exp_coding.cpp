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

#include "spikevit/exp_coding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spikevit/parallel.hpp"

namespace spikevit {

namespace {

constexpr std::size_t kMaxTimeSteps = 16;
constexpr std::size_t kMaxCombinations = std::size_t{1} << 20;

std::vector<double> base_table(const TemporalGrouping& g) {
  std::vector<double> bases(g.time_steps);
  double b = 1.0;
  for (std::size_t t = 0; t < g.time_steps; ++t, b *= g.alpha) bases[t] = b;
  return bases;
}

// Sum of the bases selected by `mask`, accumulated in ascending step order.
double mask_sum(std::uint32_t mask, std::span<const double> bases) {
  double sum = 0.0;
  for (std::size_t t = 0; t < bases.size(); ++t)
    if (mask & (std::uint32_t{1} << t)) sum += bases[t];
  return sum;
}

struct Candidate {
  double value;
  std::uint32_t mask;
};

void enumerate(const TemporalGrouping& g, std::span<const double> bases, std::size_t group,
               std::uint32_t mask, std::vector<Candidate>& out) {
  if (group == g.groups.size()) {
    out.push_back({mask_sum(mask, bases), mask});
    return;
  }
  enumerate(g, bases, group + 1, mask, out);
  for (std::size_t t : g.groups[group]) {
    enumerate(g, bases, group + 1, mask | (std::uint32_t{1} << t), out);
  }
}

// Largest base first, at most one base per group. Returns 0 and sets ok=false
// when the greedy walk does not land on `level` exactly.
std::uint32_t greedy_mask(const TemporalGrouping& g, std::span<const double> bases, double level,
                          bool& ok) {
  std::vector<std::size_t> group_of(g.time_steps);
  for (std::size_t i = 0; i < g.groups.size(); ++i)
    for (std::size_t t : g.groups[i]) group_of[t] = i;
  std::vector<std::size_t> order(g.time_steps);
  for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bases[a] > bases[b] || (bases[a] == bases[b] && a > b);
  });
  std::vector<bool> used(g.groups.size(), false);
  double remaining = level;
  std::uint32_t mask = 0;
  for (std::size_t t : order) {
    if (used[group_of[t]] || bases[t] > remaining) continue;
    used[group_of[t]] = true;
    remaining -= bases[t];
    mask |= std::uint32_t{1} << t;
  }
  ok = mask_sum(mask, bases) == level;
  return ok ? mask : 0;
}

}  // namespace

TemporalGrouping TemporalGrouping::contiguous(std::size_t time_steps, std::size_t group_size,
                                              double alpha) {
  if (time_steps == 0 || group_size == 0) {
    throw InvalidGroupingError("time steps and group size must be positive");
  }
  TemporalGrouping g;
  g.time_steps = time_steps;
  g.alpha = alpha;
  g.groups.clear();
  for (std::size_t start = 0; start < time_steps; start += group_size) {
    std::vector<std::size_t> run;
    for (std::size_t t = start; t < std::min(time_steps, start + group_size); ++t) run.push_back(t);
    g.groups.push_back(std::move(run));
  }
  g.validate();
  return g;
}

TemporalGrouping TemporalGrouping::exp_if(std::size_t time_steps, double alpha) {
  return contiguous(time_steps, time_steps, alpha);
}

TemporalGrouping TemporalGrouping::uniform(std::size_t time_steps) {
  return contiguous(time_steps, 1, 1.0);
}

void TemporalGrouping::validate() const {
  if (time_steps == 0 || time_steps > kMaxTimeSteps) {
    throw InvalidGroupingError("time steps must lie in [1, " + std::to_string(kMaxTimeSteps) + "]");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidGroupingError("alpha must be positive and finite");
  }
  if (groups.empty()) throw InvalidGroupingError("at least one temporal group is required");
  std::vector<int> seen(time_steps, 0);
  for (const auto& group : groups) {
    if (group.empty()) throw InvalidGroupingError("temporal groups must be non-empty");
    for (std::size_t t : group) {
      if (t >= time_steps) {
        throw InvalidGroupingError("base index " + std::to_string(t) + " out of range");
      }
      if (seen[t]++) {
        throw InvalidGroupingError("base alpha^" + std::to_string(t) +
                                   " appears in more than one group");
      }
    }
  }
  for (std::size_t t = 0; t < time_steps; ++t) {
    if (!seen[t]) throw InvalidGroupingError("base alpha^" + std::to_string(t) + " is unassigned");
  }
}

ExpLevelSet::ExpLevelSet() { *this = build_level_set(TemporalGrouping{}, 1.0); }

double ExpLevelSet::unit() const {
  return static_cast<double>(time_steps()) * lambda_ / s_max();
}

void ExpLevelSet::finish() {
  boundaries_.resize(levels_.size() - 1);
  for (std::size_t i = 0; i + 1 < levels_.size(); ++i) {
    boundaries_[i] = lambda_ * (levels_[i] + levels_[i + 1]) / 2.0;
  }
  amplitudes_ = base_table(grouping_);
}

std::size_t ExpLevelSet::quantize(double x, std::uint64_t* comparisons) const {
  return search_interval(boundaries_, x, comparisons);
}

std::vector<double> ExpLevelSet::pre_thresholds(double gain) const {
  if (!(gain > 0.0)) throw ArgumentError("threshold gain must be positive");
  std::vector<double> out(boundaries_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = boundaries_[i] / gain;
  return out;
}

std::size_t ExpLevelSet::index_of(double level) const {
  auto it = std::lower_bound(levels_.begin(), levels_.end(), level);
  if (it == levels_.end() || *it != level) {
    throw ContractError("value " + std::to_string(level) + " is not a level of this set");
  }
  return static_cast<std::size_t>(it - levels_.begin());
}

ExpLevelSet build_level_set(const TemporalGrouping& grouping, double lambda) {
  grouping.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be positive");
  std::size_t combos = 1;
  for (const auto& g : grouping.groups) {
    combos *= g.size() + 1;
    if (combos > kMaxCombinations) throw InvalidGroupingError("level set is too large");
  }
  const auto bases = base_table(grouping);
  std::vector<Candidate> cands;
  cands.reserve(combos);
  enumerate(grouping, bases, 0, 0, cands);
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value < b.value; });

  ExpLevelSet ls{ExpLevelSet::Uninitialized{}};
  ls.grouping_ = grouping;
  ls.lambda_ = lambda;
  ls.symmetric_ = false;
  ls.levels_.clear();
  ls.masks_.clear();
  ls.signs_.clear();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (i > 0 && cands[i].value == cands[i - 1].value) continue;
    bool ok = false;
    const std::uint32_t greedy = greedy_mask(grouping, bases, cands[i].value, ok);
    ls.levels_.push_back(cands[i].value);
    ls.masks_.push_back(ok ? greedy : cands[i].mask);
    ls.signs_.push_back(1);
  }
  ls.finish();
  return ls;
}

ExpLevelSet symmetric_level_set(const ExpLevelSet& ls) {
  if (ls.is_symmetric()) return ls;
  ExpLevelSet out = ls;
  out.symmetric_ = true;
  out.levels_.clear();
  out.masks_.clear();
  out.signs_.clear();
  for (std::size_t i = ls.levels_.size(); i-- > 1;) {
    out.levels_.push_back(-ls.levels_[i]);
    out.masks_.push_back(ls.masks_[i]);
    out.signs_.push_back(-1);
  }
  for (std::size_t i = 0; i < ls.levels_.size(); ++i) {
    out.levels_.push_back(ls.levels_[i]);
    out.masks_.push_back(ls.masks_[i]);
    out.signs_.push_back(1);
  }
  out.finish();
  return out;
}

void testing::shift_boundary(ExpLevelSet& ls, std::size_t index, double delta) {
  ls.boundaries_.at(index) += delta;
}

std::size_t search_interval(std::span<const double> thresholds, double x,
                            std::uint64_t* comparisons) {
  std::size_t first = 0;
  std::size_t len = thresholds.size();
  std::uint64_t count = 0;
  while (len > 0) {
    const std::size_t half = len / 2;
    ++count;
    if (thresholds[first + half] <= x) {
      first += half + 1;
      len -= half + 1;
    } else {
      len = half;
    }
  }
  if (comparisons) *comparisons += count;
  return first;
}

std::size_t quantize(double x, const ExpLevelSet& ls, std::uint64_t* comparisons) {
  return ls.quantize(x, comparisons);
}

SpikeTrain encode_spikes(double level_value, const ExpLevelSet& ls) {
  const std::size_t i = ls.index_of(level_value);
  const std::uint32_t mask = ls.spike_mask(i);
  const double sign = ls.level_sign(i);
  SpikeTrain train(ls.time_steps(), 0.0);
  for (std::size_t t = 0; t < train.size(); ++t)
    if (mask & (std::uint32_t{1} << t)) train[t] = sign * ls.amplitudes()[t];
  return train;
}

double decode_spikes(std::span<const double> train, const ExpLevelSet& ls, double lambda) {
  if (train.size() != ls.time_steps()) {
    throw MalformedTrainError("train has " + std::to_string(train.size()) + " steps, expected " +
                              std::to_string(ls.time_steps()));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < train.size(); ++t) {
    const double a = ls.amplitudes()[t];
    const double v = train[t];
    if (v != 0.0 && v != a && !(ls.is_symmetric() && v == -a)) {
      throw MalformedTrainError("amplitude " + std::to_string(v) + " at step " +
                                std::to_string(t) + " is not a base of this level set");
    }
    sum += v;
  }
  return lambda * sum / ls.s_max();
}

double expg_forward(double i_avg, std::size_t time_steps, double v0, const ExpLevelSet& ls) {
  const double x = i_avg * static_cast<double>(time_steps) + v0;
  return ls.lambda() * ls.levels()[ls.quantize(x)] / ls.s_max();
}

double qcfs_forward(double i_avg, std::size_t time_steps, double v0, double theta) {
  if (!(theta > 0.0)) throw ArgumentError("theta must be positive");
  if (time_steps == 0) throw ArgumentError("time steps must be positive");
  const double T = static_cast<double>(time_steps);
  const double q = std::floor((i_avg * T + v0) / theta);
  return theta / T * std::clamp(q, 0.0, T);
}

BlendWeights blend_weight(const BlendSchedule& schedule) {
  if (schedule.total_epochs == 0) throw ArgumentError("total epochs must be positive");
  if (schedule.epoch > schedule.total_epochs) {
    throw ArgumentError("epoch exceeds total epochs");
  }
  const double c = std::cos(std::numbers::pi * static_cast<double>(schedule.epoch) /
                            static_cast<double>(schedule.total_epochs));
  return {(1.0 + c) / 2.0, (1.0 - c) / 2.0};
}

double mixed_activation(double i_avg, std::size_t time_steps, double v0, const ExpLevelSet& ls,
                        const BlendSchedule& schedule, ClipReluForm form) {
  const BlendWeights w = blend_weight(schedule);
  const double lambda = ls.lambda();
  double r = (i_avg * static_cast<double>(time_steps) + v0) / lambda;
  if (form == ClipReluForm::rounded) r = std::floor(r + 0.5);
  const double clip_relu = lambda * std::clamp(r, 0.0, 1.0);
  return w.relu * clip_relu + w.quant * expg_forward(i_avg, time_steps, v0, ls);
}

std::size_t select_level(const double* current, std::size_t stride, std::size_t time_steps,
                         double offset, std::span<const double> thresholds,
                         std::uint64_t& comparisons) {
  double total = current[0];
  for (std::size_t t = 1; t < time_steps; ++t) total += current[t * stride];
  return search_interval(thresholds, total + offset, &comparisons);
}

SpikeTensor fire(const DenseTensor& current, const ExpLevelSet& ls, const FireOptions& options,
                 FireStats* stats) {
  const auto& s = current.shape();
  const std::size_t T = ls.time_steps();
  if (s.t != T) {
    throw ShapeError("layer expects " + std::to_string(T) + " time-steps, got " +
                     std::to_string(s.t));
  }
  const std::vector<double> thresholds = ls.pre_thresholds(options.input_gain);
  const double offset = options.v0 / options.input_gain;
  const std::size_t neurons = s.b * s.h * s.w * s.c;
  const auto amps = ls.amplitudes();
  DenseTensor codes(s);
  const double* in = current.data().data();
  double* out = codes.data().data();

  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (neurons + kChunk - 1) / kChunk;
  std::vector<FireStats> partial(chunks);
  const std::size_t top = ls.levels().size() - 1;
  parallel_for(chunks, options.threads, [&](std::size_t k) {
    FireStats local;
    const std::size_t end = std::min(neurons, (k + 1) * kChunk);
    for (std::size_t n = k * kChunk; n < end; ++n) {
      const std::size_t level =
          options.saturate ? top : select_level(in + n, neurons, T, offset, thresholds, local.comparisons);
      const std::uint32_t mask = ls.spike_mask(level);
      const double sign = ls.level_sign(level);
      for (std::size_t t = 0; t < T; ++t) {
        if (mask & (std::uint32_t{1} << t)) {
          out[t * neurons + n] = sign * amps[t];
          ++local.nonzero;
        }
      }
    }
    partial[k] = local;
  });
  if (stats) {
    for (const auto& p : partial) {
      stats->comparisons += p.comparisons;
      stats->nonzero += p.nonzero;
    }
    stats->slots += s.size();
  }
  return SpikeTensor(std::move(codes), ls.unit(), ls.alpha(), ls.is_symmetric(), ls.max_spikes());
}

}  // namespace spikevit

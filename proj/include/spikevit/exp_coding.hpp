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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spikevit/tensor.hpp"

namespace spikevit {

// Partition of the exponential bases {alpha^0, ..., alpha^(T-1)} into
// temporal groups. Groups list base indices (time-steps); every group
// implicitly also contains 0, so a neuron fires at most once per group.
struct TemporalGrouping {
  std::size_t time_steps = 1;
  double alpha = 2.0;
  std::vector<std::vector<std::size_t>> groups{{0}};

  // Runs of `group_size` consecutive bases; the last run may be shorter.
  static TemporalGrouping contiguous(std::size_t time_steps, std::size_t group_size,
                                     double alpha = 2.0);
  // Single group (n = 1): the Exp-IF special case.
  static TemporalGrouping exp_if(std::size_t time_steps, double alpha = 2.0);
  // alpha = 1 with one base per group: uniform levels {0, ..., T}.
  static TemporalGrouping uniform(std::size_t time_steps);

  std::size_t group_count() const { return groups.size(); }
  void validate() const;
  bool operator==(const TemporalGrouping&) const = default;
};

class ExpLevelSet;
namespace testing {
// Moves one decision boundary; used by the verification suite's negative
// control to prove that a corrupted quantizer is detected.
void shift_boundary(ExpLevelSet& ls, std::size_t index, double delta);
}  // namespace testing

// Achievable coded values of an ExpG-IF layer together with the decision
// thresholds and the spike pattern that realizes each level.
class ExpLevelSet {
 public:
  ExpLevelSet();

  const TemporalGrouping& grouping() const { return grouping_; }
  std::size_t time_steps() const { return grouping_.time_steps; }
  double alpha() const { return grouping_.alpha; }
  double lambda() const { return lambda_; }
  bool is_symmetric() const { return symmetric_; }
  std::size_t max_spikes() const { return grouping_.group_count(); }

  std::span<const double> levels() const { return levels_; }
  // lambda * (levels[i] + levels[i+1]) / 2, one per adjacent pair.
  std::span<const double> boundaries() const { return boundaries_; }
  std::span<const double> amplitudes() const { return amplitudes_; }
  double s_max() const { return levels_.back(); }
  // Real value of a unit code: lambda * T / s_max, so the mean over T steps
  // of unit * sum(codes) equals the decoded rate.
  double unit() const;

  // Bit t set: spike at step t.
  std::uint32_t spike_mask(std::size_t level_index) const { return masks_[level_index]; }
  int level_sign(std::size_t level_index) const { return signs_[level_index]; }

  // Index i with boundaries[i-1] <= x < boundaries[i], clamped to the level
  // range; ties go to the upper level. Binary search, at most
  // ceil(log2 |levels|) comparisons.
  std::size_t quantize(double x, std::uint64_t* comparisons = nullptr) const;
  // Boundaries divided by `gain`: quantizing x against these equals
  // quantizing gain * x against boundaries().
  std::vector<double> pre_thresholds(double gain) const;
  // Position of an exact level value; ContractError when absent.
  std::size_t index_of(double level) const;

 private:
  friend ExpLevelSet build_level_set(const TemporalGrouping& grouping, double lambda);
  friend ExpLevelSet symmetric_level_set(const ExpLevelSet& ls);
  friend void testing::shift_boundary(ExpLevelSet& ls, std::size_t index, double delta);

  struct Uninitialized {};
  explicit ExpLevelSet(Uninitialized) {}
  void finish();

  TemporalGrouping grouping_;
  double lambda_ = 1.0;
  bool symmetric_ = false;
  std::vector<double> levels_;
  std::vector<double> boundaries_;
  std::vector<double> amplitudes_;
  std::vector<std::uint32_t> masks_;
  std::vector<int> signs_;
};

ExpLevelSet build_level_set(const TemporalGrouping& grouping, double lambda);
// Mirrors the levels to {-v} U {v}; spikes of negative levels are negative.
ExpLevelSet symmetric_level_set(const ExpLevelSet& ls);

// Number of thresholds <= x, found by binary search.
std::size_t search_interval(std::span<const double> thresholds, double x,
                            std::uint64_t* comparisons = nullptr);

std::size_t quantize(double x, const ExpLevelSet& ls, std::uint64_t* comparisons = nullptr);

// Per-step amplitudes: 0 or +-alpha^t at step t.
using SpikeTrain = std::vector<double>;

SpikeTrain encode_spikes(double level_value, const ExpLevelSet& ls);
double decode_spikes(std::span<const double> train, const ExpLevelSet& ls, double lambda);

// Rate predicted for average input i_avg over T steps. The quantizer input
// (i_avg * T + v0) is compared with the lambda-scaled boundaries.
double expg_forward(double i_avg, std::size_t time_steps, double v0, const ExpLevelSet& ls);
// Uniform-quantization baseline with floor and clip to [0, T].
double qcfs_forward(double i_avg, std::size_t time_steps, double v0, double theta);

struct BlendSchedule {
  std::size_t epoch = 0;
  std::size_t total_epochs = 1;
};

struct BlendWeights {
  double relu;
  double quant;
};

BlendWeights blend_weight(const BlendSchedule& schedule);

enum class ClipReluForm { continuous, rounded };

// Progressive activation: ClipReLU blended into the ExpG rate by a cosine
// schedule over training epochs.
double mixed_activation(double i_avg, std::size_t time_steps, double v0, const ExpLevelSet& ls,
                        const BlendSchedule& schedule,
                        ClipReluForm form = ClipReluForm::continuous);

struct FireOptions {
  double input_gain = 1.0;  // the neuron integrates input_gain * current
  double v0 = 0.0;
  bool saturate = false;    // every neuron emits the s_max pattern
  int threads = 1;
};

struct FireStats {
  std::uint64_t comparisons = 0;
  std::uint64_t nonzero = 0;
  std::uint64_t slots = 0;
};

// Level index chosen by one neuron whose per-step currents are
// current[0], current[stride], ... (T values).
std::size_t select_level(const double* current, std::size_t stride, std::size_t time_steps,
                         double offset, std::span<const double> thresholds,
                         std::uint64_t& comparisons);

// ExpG-IF layer over a (T, B, H, W, C) current: integrates each neuron over
// time, looks up its level and emits the precomputed spike pattern.
SpikeTensor fire(const DenseTensor& current, const ExpLevelSet& ls,
                 const FireOptions& options = {}, FireStats* stats = nullptr);

}  // namespace spikevit

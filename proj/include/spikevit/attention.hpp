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
#include <optional>
#include <span>

#include "spikevit/conv.hpp"
#include "spikevit/exp_coding.hpp"
#include "spikevit/runtime.hpp"
#include "spikevit/tensor.hpp"

namespace spikevit {

// out (rows x cols) = s (rows x inner) * d (inner x cols), where every
// nonzero entry of s is +-2^e. Each row adds or subtracts rows of d and
// applies the power of two by an exponent shift; no general multiplies.
// Returns the number of accumulations (nonzero entries of s times cols).
std::uint64_t spike_matmul_into(std::span<const double> s, std::size_t rows, std::size_t inner,
                                std::span<const double> d, std::size_t cols, std::span<double> out);
// Adds the accumulation count to *accumulations when given.
Matrix spike_matmul(const Matrix& s, const Matrix& d, std::uint64_t* accumulations = nullptr);

// Rate-domain attention over (T, B, H, W, C) tensors with heads splitting
// the channels. `activation` is applied to the scaled scores: nullopt means
// identity, otherwise the ExpG rate function of that level set (v0 = 0).
struct AttentionConfig {
  std::size_t heads = 1;
  std::optional<ExpLevelSet> activation;
  std::optional<double> scale;  // default 1 / sqrt(head_dim)

  double score_scale(std::size_t channels) const;
};

// Product of the averaged operands: f(scale * Q_avg K_avg^T) V_avg. Inputs
// may carry any number of time-steps; they are averaged first. Output has
// one time-step.
DenseTensor ssa_conversion(const DenseTensor& q, const DenseTensor& k, const DenseTensor& v,
                           const AttentionConfig& cfg);

// Per-step form that only multiplies Q_t with the accumulated K and V
// (sum over steps / T). With an activation, the scores of one query-key pair
// are integrated over time by a spiking neuron of that level set, so the
// temporal mean of the output equals ssa_conversion exactly. Output has T
// time-steps.
DenseTensor ssa_conversion_expanded(const DenseTensor& q, const DenseTensor& k,
                                    const DenseTensor& v, const AttentionConfig& cfg);

// Per-step attention f(scale * Q_t K_t^T) V_t (activation applied pointwise).
DenseTensor ssa_stbp(const DenseTensor& q, const DenseTensor& k, const DenseTensor& v,
                     const AttentionConfig& cfg);

// Result of the spiking attention core: real output = unit * raw.
struct AttentionOutput {
  DenseTensor raw;
  double unit = 1.0;
};

// Grouped spiking attention. q: spikes (T, B, H, W, C); k_sum, v_sum: time
// sums of the key and value currents, (1, B, H, W, C). Channels before
// plan.split_channel attend within strided groups, the rest within windows;
// heads split each half. The scores fire through `score_levels` with the
// 1/sqrt(head_dim) scale folded into the thresholds.
AttentionOutput grouped_spike_attention(const SpikeTensor& q, const DenseTensor& k_sum,
                                        const DenseTensor& v_sum, const GroupingPlan& plan,
                                        std::size_t heads, const ExpLevelSet& score_levels,
                                        const ForwardContext& ctx);

struct GwSsaParams {
  ExpLevelSet sn_in;
  ExpLevelSet sn_q;
  ExpLevelSet sn_score;
  ExpLevelSet sn_value;  // symmetric; feeds the depthwise path
  ExpLevelSet sn_out;
  ConvParams q;
  ConvParams k;
  ConvParams v;
  ConvParams depthwise;
  ConvParams project;
  GroupingPlan plan;
  std::size_t heads = 1;
  bool conv_path = true;  // false: plain attention without the depthwise term
};

// Attention sub-block on the block input current (T, B, H, W, C); returns
// project(SN(attention + depthwise(SN(V)))) + input.
DenseTensor gw_ssa(const DenseTensor& input, const GwSsaParams& p, const ForwardContext& ctx);

}  // namespace spikevit

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
#include <span>
#include <vector>

#include "spikevit/blocks.hpp"
#include "spikevit/exp_coding.hpp"
#include "spikevit/model.hpp"
#include "spikevit/tensor.hpp"

// Brute-force reference implementations. They work on real values
// throughout and share no kernels with the engine; only the tensor container
// and the grouping/regroup ops are reused.
namespace spikevit::oracle {

// Seeds used by every randomized equivalence suite.
inline constexpr std::uint64_t kSeeds[] = {1, 7, 42, 1337};

// Nearest level of x / lambda, ties to the upper level, by a linear scan.
std::size_t quantize_linear(double x, std::span<const double> levels, double lambda,
                            std::uint64_t* comparisons = nullptr);

// All sums picking at most one base from each group (odometer enumeration),
// sorted and deduplicated.
std::vector<double> level_enum(const TemporalGrouping& g);
std::vector<double> symmetric_levels(std::span<const double> levels);

// Every spike mask (one base per group at most) whose bases sum to `level`.
std::vector<std::uint32_t> decompositions(double level, const TemporalGrouping& g);

// Real per-step spike values for one neuron that integrated `total`.
std::vector<double> fire_neuron(double total, const TemporalGrouping& g, double lambda,
                                bool symmetric);

struct LevelSpec {
  TemporalGrouping grouping;
  double lambda = 1.0;
  bool symmetric = false;

  static LevelSpec of(const ExpLevelSet& ls);
};

// Spiking layer on a real (T, B, H, W, C) current; returns real spike values.
DenseTensor spike_values(const DenseTensor& current, const LevelSpec& spec,
                         std::uint64_t* nonzero = nullptr);

// Direct seven-loop cross-correlation with bias. When `accumulations` is
// given, adds one per nonzero input times connection.
DenseTensor conv_naive(const DenseTensor& x, const ConvParams& p,
                       std::uint64_t* accumulations = nullptr);

Matrix matmul_naive(const Matrix& a, const Matrix& b);

struct AttentionCounts {
  std::uint64_t score = 0;
  std::uint64_t value = 0;
};

// Attention inside one token set. q: real per-step spike values
// (T, 1, h, w, c); k_avg, v_avg: (1, 1, h, w, c). Scores of each head are
// scaled by 1/sqrt(head_dim) and pass through a spiking neuron per
// (query, key) pair; output (T, 1, h, w, c).
DenseTensor attention_naive(const DenseTensor& q, const DenseTensor& k_avg,
                            const DenseTensor& v_avg, std::size_t heads, const LevelSpec& score,
                            AttentionCounts* counts = nullptr);

// Rate-domain references for the conversion and per-step attention forms.
DenseTensor ssa_rate_naive(const DenseTensor& q_avg, const DenseTensor& k_avg,
                           const DenseTensor& v_avg, std::size_t heads, const ExpLevelSet* f);
DenseTensor ssa_stbp_naive(const DenseTensor& q, const DenseTensor& k, const DenseTensor& v,
                           std::size_t heads, const ExpLevelSet* f);

struct SopCounts {
  std::uint64_t sops = 0;
  std::uint64_t score = 0;
  std::uint64_t value = 0;
};

DenseTensor gw_ssa_naive(const DenseTensor& input, const GwSsaParams& p, SopCounts* counts = nullptr);
DenseTensor conv_sffn_naive(const DenseTensor& x, const ConvFfnParams& p, SopCounts* counts = nullptr);
DenseTensor sffn_naive(const DenseTensor& x, const FfnParams& p, SopCounts* counts = nullptr);
DenseTensor conv_b_naive(const DenseTensor& x, const ConvBlockParams& p, SopCounts* counts = nullptr);
DenseTensor ssa_b_naive(const DenseTensor& x, const SsaBlockParams& p, SopCounts* counts = nullptr);
Matrix header_naive(const DenseTensor& x, const LinearParams& p);
Matrix model_naive(const Model& m, const DenseTensor& input, SopCounts* counts = nullptr);

// Rate identity residual of an IF soft-reset neuron simulated step by step.
double if_rate_residual(std::span<const double> inputs, double theta, double v0);

}  // namespace spikevit::oracle

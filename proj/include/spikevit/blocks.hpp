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

#include <string>
#include <vector>

#include "spikevit/attention.hpp"
#include "spikevit/conv.hpp"
#include "spikevit/exp_coding.hpp"
#include "spikevit/runtime.hpp"
#include "spikevit/tensor.hpp"

namespace spikevit {

enum class BlockKind { conv_b, ssa_b_gw, ssa_b_plain };

const char* to_string(BlockKind kind);

// Shape-level description of one residual block.
struct BlockConfig {
  BlockKind kind = BlockKind::ssa_b_plain;
  std::size_t channels = 8;
  double r1 = 2.0;  // SConv expansion (conv_b)
  double r = 4.0;   // feed-forward expansion
  std::size_t heads = 1;
  double split_ratio = 0.5;     // share of channels in the global (strided) half
  std::size_t spatial_n = 1;    // groups per side; |G_S| = n^2
  std::size_t time_steps = 4;
  double alpha = 2.0;
  std::size_t temporal_group_size = 2;
  double lambda = 1.0;

  std::size_t hidden(double ratio) const;
  void validate() const;
};

// pointwise expand -> SN_sym -> depthwise 3x3 -> SN -> pointwise project,
// plus the residual.
struct ConvFfnParams {
  ExpLevelSet sn_in;
  ExpLevelSet sn_sym;
  ExpLevelSet sn_hidden;
  ConvParams expand;
  ConvParams depthwise;
  ConvParams project;
};

// Token-wise two-layer feed-forward with the residual.
struct FfnParams {
  ExpLevelSet sn_in;
  ExpLevelSet sn_hidden;
  ConvParams expand;
  ConvParams project;
};

struct ConvBlockParams {
  ExpLevelSet sn_in;
  ExpLevelSet sn_mid;
  ConvParams conv1;  // 3x3, C -> R1 C
  ConvParams conv2;  // 3x3, R1 C -> C
  ConvFfnParams ffn;
};

struct SsaBlockParams {
  BlockKind kind = BlockKind::ssa_b_gw;
  GwSsaParams attention;
  ConvFfnParams conv_ffn;  // ssa_b_gw
  FfnParams ffn;           // ssa_b_plain
};

struct DownsampleParams {
  ExpLevelSet sn;
  ConvParams conv;  // 3x3 stride 2
};

struct LinearParams {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::vector<double> weights;  // [in][out]
  std::vector<double> bias;     // [out]
};

// Profiler labels of a block: modules are recorded as (stage, index, kind).
struct BlockTag {
  std::string stage;
  int index = 0;
};

DenseTensor conv_sffn(const DenseTensor& x, const ConvFfnParams& p, const ForwardContext& ctx);
DenseTensor sffn(const DenseTensor& x, const FfnParams& p, const ForwardContext& ctx);
DenseTensor conv_b(const DenseTensor& x, const ConvBlockParams& p, const ForwardContext& ctx,
                   const BlockTag& tag = {});
DenseTensor ssa_b(const DenseTensor& x, const SsaBlockParams& p, const ForwardContext& ctx,
                  const BlockTag& tag = {});
DenseTensor downsample(const DenseTensor& x, const DownsampleParams& p, const ForwardContext& ctx);

// Global average over (t, h, w) followed by the affine map; (B x classes).
Matrix header(const DenseTensor& x, const LinearParams& p, const ForwardContext& ctx);

// Level sets and zero weights of the right shapes for a block config.
ConvFfnParams make_conv_ffn(const BlockConfig& cfg);
FfnParams make_ffn(const BlockConfig& cfg);
ConvBlockParams make_conv_block(const BlockConfig& cfg);
SsaBlockParams make_ssa_block(const BlockConfig& cfg);

}  // namespace spikevit

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

#include "spikevit/blocks.hpp"

#include <cmath>
#include <string>

namespace spikevit {

const char* to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::conv_b:
      return "conv_b";
    case BlockKind::ssa_b_gw:
      return "ssa_b_gw";
    case BlockKind::ssa_b_plain:
      return "ssa_b_plain";
  }
  return "?";
}

std::size_t BlockConfig::hidden(double ratio) const {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(channels)));
}

void BlockConfig::validate() const {
  if (channels == 0) throw ConfigError("block channels must be positive");
  if (!(r1 >= 1.0) || !(r >= 1.0)) throw ConfigError("expansion ratios must be at least 1");
  if (heads == 0) throw ConfigError("heads must be positive");
  if (spatial_n == 0) throw ConfigError("spatial group count must be positive");
  if (!(split_ratio >= 0.0 && split_ratio <= 1.0)) {
    throw ConfigError("split ratio must lie in [0, 1]");
  }
}

namespace {

ExpLevelSet level_set(const BlockConfig& cfg, bool symmetric = false) {
  ExpLevelSet ls = build_level_set(
      TemporalGrouping::contiguous(cfg.time_steps, cfg.temporal_group_size, cfg.alpha), cfg.lambda);
  return symmetric ? symmetric_level_set(ls) : ls;
}

void check_channels(const DenseTensor& x, std::size_t channels, const char* block) {
  if (x.shape().c != channels) {
    throw ShapeError(std::string(block) + " expects " + std::to_string(channels) +
                     " channels, got " + std::to_string(x.shape().c));
  }
}

}  // namespace

DenseTensor conv_sffn(const DenseTensor& x, const ConvFfnParams& p, const ForwardContext& ctx) {
  check_channels(x, p.expand.in_channels, "conv_sffn");
  const SpikeTensor s = fire_layer(x, p.sn_in, ctx);
  const SpikeTensor z = fire_layer(conv2d(s, p.expand, ctx), p.sn_sym, ctx);
  const SpikeTensor u = fire_layer(conv2d(z, p.depthwise, ctx), p.sn_hidden, ctx);
  return add(conv2d(u, p.project, ctx), x);
}

DenseTensor sffn(const DenseTensor& x, const FfnParams& p, const ForwardContext& ctx) {
  check_channels(x, p.expand.in_channels, "sffn");
  const SpikeTensor s = fire_layer(x, p.sn_in, ctx);
  const SpikeTensor u = fire_layer(conv2d(s, p.expand, ctx), p.sn_hidden, ctx);
  return add(conv2d(u, p.project, ctx), x);
}

DenseTensor conv_b(const DenseTensor& x, const ConvBlockParams& p, const ForwardContext& ctx,
                   const BlockTag& tag) {
  check_channels(x, p.conv1.in_channels, "conv_b");
  DenseTensor y;
  {
    ModuleScope scope(ctx, tag.stage, tag.index, "sconv");
    const SpikeTensor a = fire_layer(x, p.sn_in, ctx);
    const SpikeTensor b = fire_layer(conv2d(a, p.conv1, ctx), p.sn_mid, ctx);
    y = add(conv2d(b, p.conv2, ctx), x);
  }
  ModuleScope scope(ctx, tag.stage, tag.index, "conv_sffn");
  return conv_sffn(y, p.ffn, ctx);
}

DenseTensor ssa_b(const DenseTensor& x, const SsaBlockParams& p, const ForwardContext& ctx,
                  const BlockTag& tag) {
  check_channels(x, p.attention.q.in_channels, "ssa_b");
  const bool gw = p.kind == BlockKind::ssa_b_gw;
  if (p.kind == BlockKind::conv_b) throw ArgumentError("ssa_b cannot run a conv_b block");
  DenseTensor y;
  {
    ModuleScope scope(ctx, tag.stage, tag.index, gw ? "gw_ssa" : "ssa");
    y = gw_ssa(x, p.attention, ctx);
  }
  ModuleScope scope(ctx, tag.stage, tag.index, gw ? "conv_sffn" : "sffn");
  return gw ? conv_sffn(y, p.conv_ffn, ctx) : sffn(y, p.ffn, ctx);
}

DenseTensor downsample(const DenseTensor& x, const DownsampleParams& p, const ForwardContext& ctx) {
  check_channels(x, p.conv.in_channels, "downsample");
  return conv2d(fire_layer(x, p.sn, ctx), p.conv, ctx);
}

Matrix header(const DenseTensor& x, const LinearParams& p, const ForwardContext& ctx) {
  const TensorShape& s = x.shape();
  if (s.c != p.in_features) {
    throw ShapeError("header expects " + std::to_string(p.in_features) + " channels, got " +
                     std::to_string(s.c));
  }
  if (p.weights.size() != p.in_features * p.out_features || p.bias.size() != p.out_features) {
    throw ShapeError("header parameters do not match its feature counts");
  }
  const std::size_t per_item = s.h * s.w;
  const double count = static_cast<double>(s.t * per_item);
  Matrix logits(s.b, p.out_features);
  for (std::size_t b = 0; b < s.b; ++b) {
    std::vector<double> pooled(s.c, 0.0);
    for (std::size_t t = 0; t < s.t; ++t) {
      const double* row = x.data().data() + (t * s.b + b) * per_item * s.c;
      for (std::size_t i = 0; i < per_item; ++i)
        for (std::size_t c = 0; c < s.c; ++c) pooled[c] += row[i * s.c + c];
    }
    for (double& v : pooled) v /= count;
    for (std::size_t o = 0; o < p.out_features; ++o) logits(b, o) = p.bias[o];
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* w = p.weights.data() + c * p.out_features;
      for (std::size_t o = 0; o < p.out_features; ++o) logits(b, o) += pooled[c] * w[o];
    }
  }
  const std::uint64_t macs = static_cast<std::uint64_t>(s.b) * p.in_features * p.out_features;
  add_ops(ctx.counters(), 0, macs, macs);
  return logits;
}

ConvFfnParams make_conv_ffn(const BlockConfig& cfg) {
  cfg.validate();
  const std::size_t hid = cfg.hidden(cfg.r);
  ConvFfnParams p;
  p.sn_in = level_set(cfg);
  p.sn_sym = level_set(cfg, true);
  p.sn_hidden = level_set(cfg);
  p.expand = ConvParams::make_pointwise(cfg.channels, hid);
  p.depthwise = ConvParams::make_depthwise(hid, 3);
  p.project = ConvParams::make_pointwise(hid, cfg.channels);
  return p;
}

FfnParams make_ffn(const BlockConfig& cfg) {
  cfg.validate();
  const std::size_t hid = cfg.hidden(cfg.r);
  FfnParams p;
  p.sn_in = level_set(cfg);
  p.sn_hidden = level_set(cfg);
  p.expand = ConvParams::make_pointwise(cfg.channels, hid);
  p.project = ConvParams::make_pointwise(hid, cfg.channels);
  return p;
}

ConvBlockParams make_conv_block(const BlockConfig& cfg) {
  cfg.validate();
  const std::size_t mid = cfg.hidden(cfg.r1);
  ConvBlockParams p;
  p.sn_in = level_set(cfg);
  p.sn_mid = level_set(cfg);
  p.conv1 = ConvParams::make_full(cfg.channels, mid, 3, 1, 1);
  p.conv2 = ConvParams::make_full(mid, cfg.channels, 3, 1, 1);
  p.ffn = make_conv_ffn(cfg);
  return p;
}

SsaBlockParams make_ssa_block(const BlockConfig& cfg) {
  cfg.validate();
  if (cfg.kind == BlockKind::conv_b) throw ConfigError("make_ssa_block needs an attention block");
  const std::size_t C = cfg.channels;
  SsaBlockParams p;
  p.kind = cfg.kind;
  GwSsaParams& a = p.attention;
  a.sn_in = level_set(cfg);
  a.sn_q = level_set(cfg);
  a.sn_score = level_set(cfg);
  a.sn_out = level_set(cfg);
  a.q = ConvParams::make_pointwise(C, C);
  a.k = ConvParams::make_pointwise(C, C);
  a.v = ConvParams::make_pointwise(C, C);
  a.project = ConvParams::make_pointwise(C, C);
  a.heads = cfg.heads;
  if (cfg.kind == BlockKind::ssa_b_gw) {
    a.sn_value = level_set(cfg, true);
    a.depthwise = ConvParams::make_depthwise(C, 3);
    a.plan = GroupingPlan::from_ratio(C, cfg.split_ratio, cfg.spatial_n);
    a.conv_path = true;
    p.conv_ffn = make_conv_ffn(cfg);
  } else {
    a.plan = GroupingPlan{C, 1, GroupMode::strided, GroupMode::window};
    a.conv_path = false;
    p.ffn = make_ffn(cfg);
  }
  return p;
}

}  // namespace spikevit

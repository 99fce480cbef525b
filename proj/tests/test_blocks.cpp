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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "spikevit/blocks.hpp"
#include "spikevit/oracle.hpp"

using namespace spikevit;
using spikevit::test::max_abs_diff;
using spikevit::test::random_tensor;

namespace {

void randomize(ConvParams& c, std::uint64_t& seed) {
  test::fill_uniform(c.weights, ++seed, std::sqrt(6.0 / static_cast<double>(c.fan_in())));
  test::fill_uniform(c.bias, ++seed, 0.2);
}

BlockConfig block_cfg(BlockKind kind, std::size_t C, std::size_t T = 4) {
  BlockConfig cfg;
  cfg.kind = kind;
  cfg.channels = C;
  cfg.heads = 2;
  cfg.spatial_n = 2;
  cfg.time_steps = T;
  cfg.temporal_group_size = std::min<std::size_t>(2, T);
  return cfg;
}

bool all_zero(std::span<const double> v) {
  return std::ranges::all_of(v, [](double x) { return x == 0.0; });
}

}  // namespace

TEST_SUITE("blocks") {
  TEST_CASE("pointwise identity kernel") {
    ConvParams p = ConvParams::make_pointwise(3, 3, false);
    for (std::size_t c = 0; c < 3; ++c) p.weights[c * 3 + c] = 1.0;
    const DenseTensor x = random_tensor({2, 1, 4, 4, 3}, 1);
    CHECK(max_abs_diff(conv2d(x, p, {}).data(), x.data()) == 0.0);
    const ExpLevelSet ls = build_level_set(TemporalGrouping::contiguous(2, 1), 1.0);
    const SpikeTensor s = fire(x, ls);
    CHECK(max_abs_diff(conv2d(s, p, {}).data(), s.values().data()) < 1e-15);
  }

  TEST_CASE("stem geometry") {
    const ConvParams stem = ConvParams::make_full(3, 4, 7, 2, 3);
    const TensorShape out = stem.output_shape({1, 1, 224, 224, 3});
    CHECK(out.h == 112);
    CHECK(out.w == 112);
    CHECK(out.c == 4);
    CHECK_THROWS_AS(ConvParams::make_full(3, 4, 7, 0, 3).validate(), ArgumentError);
  }

  TEST_CASE("convolutions match the naive loops") {
    std::uint64_t seed = 0;
    for (ConvParams p : {ConvParams::make_depthwise(5, 3), ConvParams::make_full(5, 4, 3, 2, 1),
                         ConvParams::make_pointwise(5, 6)}) {
      randomize(p, seed);
      const DenseTensor x = random_tensor({2, 2, 7, 7, 5}, ++seed, -1.0, 2.0);
      std::uint64_t macs = 0;
      const DenseTensor want = oracle::conv_naive(x, p, &macs);
      Profiler prof;
      prof.enter("t", 0, "conv");
      ForwardContext ctx;
      ctx.profiler = &prof;
      CHECK(max_abs_diff(conv2d(x, p, ctx).data(), want.data()) < 1e-6);
      CHECK(prof.report().modules.at(0).macs == macs);
      const ExpLevelSet ls = build_level_set(TemporalGrouping::contiguous(2, 1), 1.0);
      const SpikeTensor s = fire(x, ls);
      std::uint64_t acc = 0;
      const DenseTensor sw = oracle::conv_naive(s.values(), p, &acc);
      Profiler sp;
      sp.enter("t", 0, "conv");
      ForwardContext sctx;
      sctx.profiler = &sp;
      CHECK(max_abs_diff(conv2d(s, p, sctx).data(), sw.data()) < 1e-6);
      CHECK(sp.report().modules.at(0).sops == acc);
      CHECK(sp.report().modules.at(0).macs == 0);
    }
  }

  TEST_CASE("zero weights and zero input give zero") {
    const DenseTensor x({4, 1, 4, 4, 8});
    CHECK(all_zero(conv_b(x, make_conv_block(block_cfg(BlockKind::conv_b, 8)), {}).data()));
    CHECK(all_zero(ssa_b(x, make_ssa_block(block_cfg(BlockKind::ssa_b_gw, 8)), {}).data()));
    CHECK(all_zero(ssa_b(x, make_ssa_block(block_cfg(BlockKind::ssa_b_plain, 8)), {}).data()));
  }

  TEST_CASE("zero weights pass the residual through") {
    const DenseTensor x = random_tensor({4, 1, 4, 4, 8}, 3);
    const ConvFfnParams p = make_conv_ffn(block_cfg(BlockKind::ssa_b_gw, 8));
    CHECK(max_abs_diff(conv_sffn(x, p, {}).data(), x.data()) == 0.0);
    const FfnParams f = make_ffn(block_cfg(BlockKind::ssa_b_plain, 8));
    CHECK(max_abs_diff(sffn(x, f, {}).data(), x.data()) == 0.0);
  }

  TEST_CASE("internal widths") {
    BlockConfig cfg = block_cfg(BlockKind::conv_b, 24);
    const ConvBlockParams c = make_conv_block(cfg);
    CHECK(c.conv1.out_channels == 48);
    CHECK(c.conv2.in_channels == 48);
    CHECK(c.conv2.out_channels == 24);
    cfg = block_cfg(BlockKind::ssa_b_gw, 96);
    CHECK(make_conv_ffn(cfg).expand.out_channels == 384);
    CHECK(make_ffn(cfg).expand.out_channels == 384);
  }

  TEST_CASE("random blocks match the composed oracle") {
    std::uint64_t seed = 100;
    for (std::size_t T : {1, 4}) {
      const DenseTensor x = random_tensor({T, 2, 4, 4, 8}, ++seed, -1.0, 2.0);

      ConvBlockParams cb = make_conv_block(block_cfg(BlockKind::conv_b, 8, T));
      for (ConvParams* c : {&cb.conv1, &cb.conv2, &cb.ffn.expand, &cb.ffn.depthwise, &cb.ffn.project})
        randomize(*c, seed);
      oracle::SopCounts counts;
      Profiler prof;
      ForwardContext ctx;
      ctx.profiler = &prof;
      CHECK(max_abs_diff(conv_b(x, cb, ctx).data(), oracle::conv_b_naive(x, cb, &counts).data()) <
            1e-5);
      CHECK(prof.report().total_sops == counts.sops);

      CHECK(max_abs_diff(conv_sffn(x, cb.ffn, {}).data(), oracle::conv_sffn_naive(x, cb.ffn).data()) <
            1e-5);

      FfnParams f = make_ffn(block_cfg(BlockKind::ssa_b_plain, 8, T));
      randomize(f.expand, seed);
      randomize(f.project, seed);
      CHECK(max_abs_diff(sffn(x, f, {}).data(), oracle::sffn_naive(x, f).data()) < 1e-5);

      for (BlockKind kind : {BlockKind::ssa_b_gw, BlockKind::ssa_b_plain}) {
        SsaBlockParams sb = make_ssa_block(block_cfg(kind, 8, T));
        for (ConvParams* c : {&sb.attention.q, &sb.attention.k, &sb.attention.v, &sb.attention.project})
          randomize(*c, seed);
        if (kind == BlockKind::ssa_b_gw) {
          randomize(sb.attention.depthwise, seed);
          for (ConvParams* c : {&sb.conv_ffn.expand, &sb.conv_ffn.depthwise, &sb.conv_ffn.project})
            randomize(*c, seed);
        } else {
          sb.ffn = f;
        }
        CHECK(max_abs_diff(ssa_b(x, sb, {}).data(), oracle::ssa_b_naive(x, sb).data()) < 1e-5);
      }
    }
  }

  TEST_CASE("plain block on a single token and step") {
    BlockConfig cfg = block_cfg(BlockKind::ssa_b_plain, 4, 1);
    cfg.heads = 1;
    cfg.spatial_n = 1;
    SsaBlockParams p = make_ssa_block(cfg);
    std::uint64_t seed = 7;
    for (ConvParams* c : {&p.attention.q, &p.attention.k, &p.attention.v, &p.attention.project,
                          &p.ffn.expand, &p.ffn.project})
      randomize(*c, seed);
    const DenseTensor x = random_tensor({1, 1, 1, 1, 4}, 8, 0.0, 2.0);
    CHECK(max_abs_diff(ssa_b(x, p, {}).data(), oracle::ssa_b_naive(x, p).data()) < 1e-12);
  }

  TEST_CASE("stage-3 block keeps its shape") {
    BlockConfig cfg = block_cfg(BlockKind::ssa_b_gw, 192);
    cfg.heads = 8;
    const SsaBlockParams p = make_ssa_block(cfg);
    const DenseTensor x = random_tensor({4, 1, 14, 14, 192}, 1);
    CHECK(ssa_b(x, p, {}).shape() == x.shape());
  }

  TEST_CASE("downsample halves the feature map") {
    DownsampleParams d;
    d.sn = build_level_set(TemporalGrouping::contiguous(4, 2), 1.0);
    d.conv = ConvParams::make_full(8, 16, 3, 2, 1);
    const DenseTensor y = downsample(random_tensor({4, 1, 28, 28, 8}, 2), d, {});
    CHECK(y.shape() == TensorShape{4, 1, 14, 14, 16});
  }

  TEST_CASE("header pools then applies the affine map") {
    LinearParams head;
    head.in_features = 3;
    head.out_features = 1000;
    head.weights.assign(3 * 1000, 0.0);
    head.bias.assign(1000, 0.5);
    for (std::size_t c = 0; c < 3; ++c) head.weights[c * 1000 + c] = 1.0;
    const DenseTensor x({4, 2, 3, 3, 3}, 0.25);
    const Matrix y = header(x, head, {});
    CHECK(y.rows == 2);
    CHECK(y.cols == 1000);
    CHECK(y(1, 2) == doctest::Approx(0.75));
    CHECK(y(1, 7) == doctest::Approx(0.5));

    LinearParams r;
    r.in_features = 6;
    r.out_features = 4;
    r.weights.resize(24);
    r.bias.resize(4);
    test::fill_uniform(r.weights, 1, 1.0);
    test::fill_uniform(r.bias, 2, 1.0);
    const DenseTensor z = random_tensor({2, 3, 2, 2, 6}, 3);
    CHECK(max_abs_diff(header(z, r, {}).data, oracle::header_naive(z, r).data) < 1e-6);
  }
}

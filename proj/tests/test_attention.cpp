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
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "spikevit/attention.hpp"
#include "spikevit/blocks.hpp"
#include "spikevit/oracle.hpp"

using namespace spikevit;
using spikevit::test::max_abs_diff;
using spikevit::test::random_tensor;

namespace {

Matrix random_spikes(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  Matrix s(r, c);
  for (double& v : s.data) {
    const auto k = g() % 10;
    if (k < 5) continue;
    v = std::ldexp(k % 2 ? -1.0 : 1.0, static_cast<int>(k) - 7);
  }
  return s;
}

SsaBlockParams random_block(BlockKind kind, std::size_t C, std::size_t heads, std::size_t n,
                            std::size_t T, std::uint64_t seed) {
  BlockConfig cfg;
  cfg.kind = kind;
  cfg.channels = C;
  cfg.heads = heads;
  cfg.spatial_n = n;
  cfg.time_steps = T;
  cfg.temporal_group_size = std::min<std::size_t>(2, T);
  SsaBlockParams p = make_ssa_block(cfg);
  std::uint64_t s = seed;
  for (ConvParams* c : {&p.attention.q, &p.attention.k, &p.attention.v, &p.attention.project,
                        &p.attention.depthwise}) {
    const double bound = c->weights.empty() ? 0.0 : std::sqrt(6.0 / static_cast<double>(c->fan_in()));
    test::fill_uniform(c->weights, ++s, bound);
    test::fill_uniform(c->bias, ++s, 0.2);
  }
  return p;
}

}  // namespace

TEST_SUITE("attention") {
  TEST_CASE("spike matmul special cases") {
    Matrix eye(5, 5);
    for (std::size_t i = 0; i < 5; ++i) eye(i, i) = 1.0;
    Matrix d(5, 3);
    test::fill_uniform(d.data, 3, 1.0);
    std::uint64_t acc = 0;
    CHECK(spike_matmul(eye, d, &acc).data == d.data);
    CHECK(acc == 15);
    acc = 0;
    const Matrix zero = spike_matmul(Matrix(4, 5), d, &acc);
    CHECK(acc == 0);
    CHECK(std::ranges::all_of(zero.data, [](double v) { return v == 0.0; }));
    CHECK_THROWS(spike_matmul(Matrix(2, 4), d));
  }

  TEST_CASE("spike matmul matches the float product") {
    for (std::uint64_t seed : oracle::kSeeds) {
      const Matrix s = random_spikes(64, 64, seed);
      Matrix d(64, 64);
      test::fill_uniform(d.data, seed + 100, 1.0);
      const Matrix got = spike_matmul(s, d);
      const Matrix want = oracle::matmul_naive(s, d);
      double scale = 0.0;
      for (double v : want.data) scale = std::max(scale, std::fabs(v));
      CHECK(max_abs_diff(got.data, want.data) / scale < 1e-6);
    }
  }

  TEST_CASE("conversion form on a single token") {
    DenseTensor q({1, 1, 1, 1, 1}, std::vector<double>{0.5});
    DenseTensor k({1, 1, 1, 1, 1}, std::vector<double>{3.0});
    DenseTensor v({1, 1, 1, 1, 1}, std::vector<double>{-2.0});
    AttentionConfig cfg;
    CHECK(ssa_conversion(q, k, v, cfg).data()[0] == doctest::Approx(-3.0));
  }

  TEST_CASE("conversion and per-step forms match their oracles") {
    for (std::uint64_t seed : oracle::kSeeds) {
      const DenseTensor q = random_tensor({3, 2, 2, 2, 2}, seed);
      const DenseTensor k = random_tensor({3, 2, 2, 2, 2}, seed + 1);
      const DenseTensor v = random_tensor({3, 2, 2, 2, 2}, seed + 2);
      AttentionConfig cfg;
      const DenseTensor conv = ssa_conversion(q, k, v, cfg);
      const DenseTensor naive = oracle::ssa_rate_naive(temporal_average(q), temporal_average(k),
                                                       temporal_average(v), 1, nullptr);
      CHECK(max_abs_diff(conv.data(), naive.data()) < 1e-6);
      const DenseTensor expanded = temporal_average(ssa_conversion_expanded(q, k, v, cfg));
      CHECK(max_abs_diff(expanded.data(), conv.data()) < 1e-6);
      const DenseTensor stbp = ssa_stbp(q, k, v, cfg);
      CHECK(max_abs_diff(stbp.data(), oracle::ssa_stbp_naive(q, k, v, 1, nullptr).data()) < 1e-6);
    }
  }

  TEST_CASE("expanded form with a spiking score activation") {
    const DenseTensor q = random_tensor({4, 1, 2, 2, 4}, 5);
    const DenseTensor k = random_tensor({4, 1, 2, 2, 4}, 6);
    const DenseTensor v = random_tensor({4, 1, 2, 2, 4}, 7);
    AttentionConfig cfg;
    cfg.heads = 2;
    cfg.activation = build_level_set(TemporalGrouping::contiguous(4, 2), 0.25);
    const DenseTensor conv = ssa_conversion(q, k, v, cfg);
    const DenseTensor expanded = temporal_average(ssa_conversion_expanded(q, k, v, cfg));
    CHECK(max_abs_diff(expanded.data(), conv.data()) < 1e-12);
  }

  TEST_CASE("per-step form") {
    const DenseTensor q = random_tensor({1, 1, 2, 2, 2}, 8);
    const DenseTensor k = random_tensor({1, 1, 2, 2, 2}, 9);
    const DenseTensor v = random_tensor({1, 1, 2, 2, 2}, 10);
    AttentionConfig cfg;
    CHECK(max_abs_diff(ssa_stbp(q, k, v, cfg).data(), ssa_conversion(q, k, v, cfg).data()) < 1e-15);

    // Permuting time permutes the outputs.
    const DenseTensor q2 = random_tensor({2, 1, 1, 2, 2}, 11);
    const DenseTensor k2 = random_tensor({2, 1, 1, 2, 2}, 12);
    const DenseTensor v2 = random_tensor({2, 1, 1, 2, 2}, 13);
    auto swap = [](const DenseTensor& x) {
      DenseTensor y(x.shape());
      const std::size_t slab = x.data().size() / 2;
      std::copy_n(x.data().begin(), slab, y.data().begin() + slab);
      std::copy_n(x.data().begin() + slab, slab, y.data().begin());
      return y;
    };
    const DenseTensor a = ssa_stbp(q2, k2, v2, cfg);
    const DenseTensor b = ssa_stbp(swap(q2), swap(k2), swap(v2), cfg);
    CHECK(max_abs_diff(swap(a).data(), b.data()) == 0.0);
  }

  TEST_CASE("grouped attention equals the per-group oracle") {
    for (std::uint64_t seed : oracle::kSeeds) {
      const SsaBlockParams p = random_block(BlockKind::ssa_b_gw, 8, 2, 2, 4, seed);
      const DenseTensor x = random_tensor({4, 2, 8, 8, 8}, seed, -1.0, 2.0);
      const DenseTensor got = gw_ssa(x, p.attention, {});
      const DenseTensor want = oracle::gw_ssa_naive(x, p.attention);
      CHECK(got.shape() == x.shape());
      CHECK(max_abs_diff(got.data(), want.data()) < 1e-5);
    }
  }

  TEST_CASE("one group over all channels is plain attention") {
    const SsaBlockParams p = random_block(BlockKind::ssa_b_plain, 8, 2, 1, 2, 3);
    CHECK(p.attention.plan.split_channel == 8);
    CHECK(p.attention.plan.n == 1);
    const DenseTensor x = random_tensor({2, 1, 4, 4, 8}, 4, -1.0, 2.0);
    CHECK(max_abs_diff(gw_ssa(x, p.attention, {}).data(), oracle::gw_ssa_naive(x, p.attention).data()) <
          1e-5);
  }

  TEST_CASE("key and value sums ignore the order of time-steps") {
    const ExpLevelSet ls = build_level_set(TemporalGrouping::contiguous(4, 2), 1.0);
    const SpikeTensor q = fire(random_tensor({4, 1, 4, 4, 4}, 1, -1.0, 2.0), ls);
    // Dyadic values keep the sums exact in any order.
    DenseTensor k = random_tensor({4, 1, 4, 4, 4}, 2);
    DenseTensor v = random_tensor({4, 1, 4, 4, 4}, 3);
    for (double& x : k.data()) x = std::round(x * 8) / 8;
    for (double& x : v.data()) x = std::round(x * 8) / 8;
    DenseTensor kp(k.shape()), vp(v.shape());
    const std::size_t slab = k.data().size() / 4;
    for (std::size_t t = 0; t < 4; ++t) {
      std::copy_n(k.data().begin() + (3 - t) * slab, slab, kp.data().begin() + t * slab);
      std::copy_n(v.data().begin() + (3 - t) * slab, slab, vp.data().begin() + t * slab);
    }
    const GroupingPlan plan = GroupingPlan::from_ratio(4, 0.5, 2);
    const AttentionOutput a =
        grouped_spike_attention(q, temporal_sum(k), temporal_sum(v), plan, 2, ls, {});
    const AttentionOutput b =
        grouped_spike_attention(q, temporal_sum(kp), temporal_sum(vp), plan, 2, ls, {});
    CHECK(max_abs_diff(a.raw.data(), b.raw.data()) == 0.0);
  }

  TEST_CASE("stage-2 attention has the right shape and no multiplies") {
    const SsaBlockParams p = random_block(BlockKind::ssa_b_gw, 96, 4, 4, 4, 42);
    const DenseTensor x = random_tensor({4, 1, 28, 28, 96}, 42, -1.0, 2.0);
    Profiler prof;
    prof.enter("stage2", 0, "gw_ssa");
    ForwardContext ctx;
    ctx.profiler = &prof;
    ctx.check_spikes = true;
    const DenseTensor y = gw_ssa(x, p.attention, ctx);
    CHECK(y.shape() == x.shape());
    CHECK(std::ranges::all_of(y.data(), [](double v) { return std::isfinite(v); }));
    const ModuleEntry& e = prof.report().modules.at(0);
    CHECK(e.multiplies == 0);
    CHECK(e.macs == 0);
    CHECK(e.score_sops > 0);
  }

  TEST_CASE("score SOPs shrink by the spatial group count at saturation") {
    std::uint64_t score[2] = {};
    for (std::size_t n : {1, 2}) {
      const SsaBlockParams p = random_block(BlockKind::ssa_b_gw, 8, 2, n, 4, 9);
      Profiler prof;
      prof.enter("s", 0, "gw_ssa");
      ForwardContext ctx;
      ctx.profiler = &prof;
      ctx.saturate = true;
      (void)gw_ssa(random_tensor({4, 1, 8, 8, 8}, 9), p.attention, ctx);
      score[n - 1] = prof.report().modules.at(0).score_sops;
    }
    CHECK(score[0] == 4 * score[1]);
  }

  TEST_CASE("grouping plans are validated") {
    GroupingPlan plan = GroupingPlan::from_ratio(8, 0.5, 3);
    CHECK_THROWS(plan.validate({1, 1, 8, 8, 8}));
    CHECK_THROWS_AS(GroupingPlan::from_ratio(8, 1.5, 2), ArgumentError);
  }
}

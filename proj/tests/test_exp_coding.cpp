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
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "spikevit/exp_coding.hpp"
#include "spikevit/oracle.hpp"

using namespace spikevit;

namespace {

std::vector<double> as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

ExpLevelSet pairs_set(double lambda = 1.0) {
  return build_level_set(TemporalGrouping::contiguous(4, 2), lambda);
}

}  // namespace

TEST_SUITE("exp_coding") {
  TEST_CASE("level sets of the worked examples") {
    const ExpLevelSet single = build_level_set(TemporalGrouping::exp_if(4), 1.0);
    CHECK(as_vector(single.levels()) == std::vector<double>{0, 1, 2, 4, 8});
    CHECK(single.s_max() == 8);
    CHECK(as_vector(single.boundaries()) == std::vector<double>{0.5, 1.5, 3, 6});
    const ExpLevelSet two = pairs_set();
    CHECK(as_vector(two.levels()) == std::vector<double>{0, 1, 2, 4, 5, 6, 8, 9, 10});
    CHECK(two.s_max() == 10);
    CHECK(as_vector(build_level_set(TemporalGrouping::exp_if(1), 1.0).levels()) ==
          std::vector<double>{0, 1});
  }

  TEST_CASE("overlapping or missing bases are rejected") {
    TemporalGrouping g;
    g.time_steps = 3;
    g.groups = {{0, 1}, {1, 2}};
    CHECK_THROWS_AS(build_level_set(g, 1.0), InvalidGroupingError);
    g.groups = {{0}, {2}};
    CHECK_THROWS_AS(build_level_set(g, 1.0), InvalidGroupingError);
    CHECK_THROWS_AS(build_level_set(TemporalGrouping::exp_if(2), 0.0), ArgumentError);
  }

  TEST_CASE("quantize picks the nearest level and clips") {
    const ExpLevelSet ls = build_level_set(TemporalGrouping::exp_if(4), 1.0);
    CHECK(ls.quantize(2.4) == 2);
    CHECK(ls.quantize(-5.0) == 0);
    CHECK(ls.quantize(100.0) == 4);
    // Ties go to the upper level.
    CHECK(ls.quantize(1.5) == 2);
    CHECK(ls.quantize(0.5) == 1);
    CHECK(ls.quantize(0.4999) == 0);
  }

  TEST_CASE("binary search matches the linear scan") {
    std::mt19937_64 g(42);
    for (std::size_t T = 1; T <= 6; ++T) {
      for (std::size_t gs = 1; gs <= T; ++gs) {
        const TemporalGrouping grouping = TemporalGrouping::contiguous(T, gs);
        const ExpLevelSet ls = build_level_set(grouping, 1.7);
        const std::vector<double> levels = oracle::level_enum(grouping);
        std::uniform_real_distribution<double> u(-2.0, 1.7 * levels.back() + 2.0);
        std::size_t limit = 0;
        while ((std::size_t{1} << limit) < levels.size()) ++limit;
        for (int i = 0; i < 20000; ++i) {
          const double x = u(g);
          std::uint64_t cmp = 0;
          REQUIRE(ls.quantize(x, &cmp) == oracle::quantize_linear(x, levels, 1.7));
          REQUIRE(cmp <= limit);
        }
        for (double b : ls.boundaries()) {
          REQUIRE(ls.quantize(b) == oracle::quantize_linear(b, levels, 1.7));
        }
      }
    }
  }

  TEST_CASE("encode and decode") {
    const ExpLevelSet ls = pairs_set();
    CHECK(encode_spikes(6, ls) == SpikeTrain{0, 2, 4, 0});
    CHECK(encode_spikes(0, ls) == SpikeTrain{0, 0, 0, 0});
    // s_max fires the largest base of each group.
    CHECK(encode_spikes(10, ls) == SpikeTrain{0, 2, 0, 8});
    CHECK(decode_spikes(SpikeTrain{0, 0, 0, 0}, ls, 1.0) == 0.0);
    CHECK(decode_spikes(SpikeTrain{0, 2, 4, 0}, ls, 1.0) == doctest::Approx(0.6));
    CHECK_THROWS_AS(encode_spikes(3, ls), ContractError);
    CHECK_THROWS_AS(decode_spikes(SpikeTrain{0, 3, 0, 0}, ls, 1.0), MalformedTrainError);
    CHECK_THROWS_AS(decode_spikes(SpikeTrain{0, 2, 0}, ls, 1.0), MalformedTrainError);
    CHECK_THROWS_AS(decode_spikes(SpikeTrain{0, -2, 0, 0}, ls, 1.0), MalformedTrainError);
  }

  TEST_CASE("every level round-trips and fires at most once per group") {
    for (std::size_t T = 1; T <= 6; ++T) {
      for (std::size_t gs = 1; gs <= T; ++gs) {
        const ExpLevelSet ls = build_level_set(TemporalGrouping::contiguous(T, gs), 1.0);
        for (double level : ls.levels()) {
          const SpikeTrain tr = encode_spikes(level, ls);
          const auto n = std::count_if(tr.begin(), tr.end(), [](double v) { return v != 0.0; });
          REQUIRE(static_cast<std::size_t>(n) <= ls.max_spikes());
          REQUIRE(decode_spikes(tr, ls, 1.0) * ls.s_max() == doctest::Approx(level));
        }
      }
    }
  }

  TEST_CASE("expg forward") {
    const ExpLevelSet ls = build_level_set(TemporalGrouping::exp_if(4), 1.5);
    // (i_avg * T + v0) / lambda = 2.4 lands on level 2.
    CHECK(expg_forward(2.4 * 1.5 / 4, 4, 0.0, ls) == doctest::Approx(1.5 * 2 / 8));
    CHECK(expg_forward(-1e9, 4, 0.0, ls) == 0.0);
    CHECK(expg_forward(1e9, 4, 0.0, ls) == 1.5);
    double prev = -1.0;
    for (double i = -1.0; i < 4.0; i += 0.001) {
      const double f = expg_forward(i, 4, 0.0, ls);
      REQUIRE(f >= prev);
      prev = f;
    }
  }

  TEST_CASE("qcfs forward") {
    CHECK(qcfs_forward(0.4, 4, 0.5, 1.0) == doctest::Approx(0.5));
    CHECK(qcfs_forward(-0.125, 4, 0.5, 1.0) == 0.0);
    CHECK(qcfs_forward(1.0, 4, 0.5, 1.0) == 1.0);
    CHECK(qcfs_forward(5.0, 4, 0.5, 1.0) == 1.0);
    double prev = -1.0;
    for (double i = -1.0; i < 2.0; i += 0.001) {
      const double f = qcfs_forward(i, 4, 0.5, 1.0);
      REQUIRE(f >= prev);
      prev = f;
    }
  }

  TEST_CASE("uniform levels reduce to the floor quantizer with a half-step shift") {
    const ExpLevelSet ls = build_level_set(TemporalGrouping::uniform(4), 1.0);
    CHECK(as_vector(ls.levels()) == std::vector<double>{0, 1, 2, 3, 4});
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int i = 0; i < 10000; ++i) {
      const double x = u(g);
      REQUIRE(expg_forward(x, 4, 0.0, ls) == doctest::Approx(qcfs_forward(x, 4, 0.5, 1.0)));
    }
  }

  TEST_CASE("blend schedule") {
    BlendWeights w = blend_weight({0, 10});
    CHECK(w.relu == 1.0);
    CHECK(w.quant == 0.0);
    w = blend_weight({10, 10});
    CHECK(w.relu == doctest::Approx(0.0));
    CHECK(w.quant == doctest::Approx(1.0));
    w = blend_weight({5, 10});
    CHECK(w.relu == doctest::Approx(0.5));
    CHECK(w.quant == doctest::Approx(0.5));
    CHECK_THROWS_AS(blend_weight({11, 10}), ArgumentError);
    CHECK_THROWS_AS(blend_weight({0, 0}), ArgumentError);
  }

  TEST_CASE("mixed activation") {
    const ExpLevelSet ls = pairs_set(2.0);
    for (double i = -0.5; i < 2.0; i += 0.01) {
      REQUIRE(mixed_activation(i, 4, 0.0, ls, {10, 10}) ==
              doctest::Approx(expg_forward(i, 4, 0.0, ls)));
    }
    // Linear region of the ClipReLU branch: value i * T + v0, slope T.
    CHECK(mixed_activation(0.2, 4, 0.1, ls, {0, 10}) == doctest::Approx(0.9));
    const double h = 1e-6;
    const double slope =
        (mixed_activation(0.2 + h, 4, 0.1, ls, {0, 10}) - mixed_activation(0.2 - h, 4, 0.1, ls, {0, 10})) /
        (2 * h);
    CHECK(slope == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(mixed_activation(10.0, 4, 0.0, ls, {0, 10}) == 2.0);
    // The rounded variant is a staircase.
    CHECK(mixed_activation(0.2, 4, 0.1, ls, {0, 10}, ClipReluForm::rounded) == 0.0);
  }

  TEST_CASE("symmetric level set") {
    const ExpLevelSet ls = symmetric_level_set(build_level_set(TemporalGrouping::exp_if(4), 1.0));
    CHECK(as_vector(ls.levels()) == std::vector<double>{-8, -4, -2, -1, 0, 1, 2, 4, 8});
    CHECK(ls.levels()[ls.quantize(-2.4)] == -2);
    const SpikeTrain tr = encode_spikes(4, ls);
    SpikeTrain neg = tr;
    for (double& v : neg) v = -v;
    CHECK(decode_spikes(neg, ls, 1.0) == -decode_spikes(tr, ls, 1.0));
    CHECK(encode_spikes(-4, ls) == neg);
  }

  TEST_CASE("fire integrates over time and matches the oracle") {
    const ExpLevelSet ls = pairs_set(1.0);
    DenseTensor cur({4, 1, 1, 1, 2}, std::vector<double>{1.0, 0.0, 0.5, 3.0, 0.2, 0.0, 0.3, 3.0});
    FireStats stats;
    const SpikeTensor s = fire(cur, ls, {}, &stats);
    // Neuron 0 integrates 2 (level 2), neuron 1 integrates 6 (bases 2 and 4).
    CHECK(s.codes().at(1, 0, 0, 0, 0) == 2.0);
    CHECK(s.codes().at(1, 0, 0, 0, 1) == 2.0);
    CHECK(s.codes().at(2, 0, 0, 0, 1) == 4.0);
    CHECK(s.codes().at(3, 0, 0, 0, 1) == 0.0);
    CHECK(stats.nonzero == 3);
    CHECK(stats.slots == 8);
    CHECK(s.unit() == doctest::Approx(0.4));
    const DenseTensor want = oracle::spike_values(cur, oracle::LevelSpec::of(ls));
    CHECK(test::max_abs_diff(s.values().data(), want.data()) < 1e-15);
    FireOptions sat;
    sat.saturate = true;
    CHECK(fire(cur, ls, sat).count_nonzero() == 4);
    CHECK_THROWS_AS(fire(DenseTensor({3, 1, 1, 1, 1}), ls), ShapeError);
  }

  TEST_CASE("negative control moves one boundary") {
    ExpLevelSet ls = build_level_set(TemporalGrouping::exp_if(4), 1.0);
    testing::shift_boundary(ls, 2, 0.5);
    CHECK(ls.quantize(3.2) != oracle::quantize_linear(3.2, oracle::level_enum(TemporalGrouping::exp_if(4)), 1.0));
  }
}

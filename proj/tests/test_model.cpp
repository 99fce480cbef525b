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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "spikevit/model.hpp"
#include "spikevit/oracle.hpp"

using namespace spikevit;

namespace {

// One plain attention block of width 8 on 16x16 inputs.
ModelConfig single_stage() {
  return parse_config(R"(
name = single
input_size = 16
classes = 10
[stage.0]
kind = ssa
channels = 8
heads = 2
)");
}

// Two stages on 16x16 inputs: a conv block and a grouped attention block.
ModelConfig two_stage() {
  return parse_config(R"(
name = two
input_size = 16
classes = 5
[stage.0]
kind = conv_b
channels = 8
[stage.1]
kind = gw_ssa
channels = 16
heads = 2
downsample = true
spatial_groups = 4
)");
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

WeightContainer without(const WeightContainer& w, const std::string& drop) {
  WeightContainer out;
  for (const auto& [name, e] : w.entries())
    if (name != drop) out.put(name, e);
  return out;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("presets") {
    const ModelConfig s = preset("small");
    REQUIRE(s.stages.size() == 5);
    CHECK(s.stages[2].depth == 2);
    CHECK(s.stages[2].channels == 96);
    CHECK(s.stages[3].depth == 6);
    CHECK(s.stages[3].channels == 192);
    CHECK(s.stages[4].depth == 2);
    CHECK(s.stages[4].channels == 240);
    CHECK(s.stage_sizes() == std::vector<std::size_t>{112, 56, 28, 14, 7});
    const ModelConfig b = preset("base");
    CHECK(b.stages[3].channels == 256);
    CHECK(b.stages[3].heads == 8);
    CHECK(b.stages[3].depth == 6);
    CHECK_THROWS_AS(preset("tiny"), ConfigError);
  }

  TEST_CASE("parameter counts") {
    auto near = [](std::size_t n, double target) {
      return std::fabs(static_cast<double>(n) - target) <= 0.1 * target;
    };
    CHECK(near(count_params(preset("small")).total, 5.35e6));
    CHECK(near(count_params(preset("base")).total, 9.36e6));
    CHECK(near(count_params(preset("large")).total, 14.48e6));
    // stem 7*7*3*8 + 8, q/k/v/project 4 * (8*8 + 8), ffn 8*32 + 32 + 32*8 + 8,
    // header 8*10 + 10.
    CHECK(count_params(single_stage()).total == 1184 + 288 + 552 + 90);
  }

  TEST_CASE("config text round trip and errors") {
    for (const char* name : {"small", "base", "large"}) {
      const ModelConfig c = preset(name);
      CHECK(parse_config(format_config(c)) == c);
    }
    const ModelConfig c = parse_config("preset = small\n[stage.2]\nchannels = 128\n");
    CHECK(c.stages[2].channels == 128);
    CHECK(c.stages[3].channels == 192);
    try {
      (void)parse_config("input_size = 32\n\nbogus = 1\n");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[stage.x]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("input_size = -3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("preset = small\n[stage.2]\nspatial_groups = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("preset = small\n[stage.0]\ndownsample = true\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("input_size = 30\npreset = small\n"), ConfigError);
  }

  TEST_CASE("single-stage toy builds and runs") {
    const ModelConfig cfg = single_stage();
    const Model m = Model::random(cfg, 1);
    const Matrix y = m.forward(synthetic_input(cfg, 2, 3));
    CHECK(y.rows == 2);
    CHECK(y.cols == 10);
  }

  TEST_CASE("zero image with zero biases yields the header bias") {
    const ModelConfig cfg = two_stage();
    Model m = Model::random(cfg, 4);
    m.visit(
        [](Model::ParamRef& p) {
          if (p.is_bias && p.module != "header") std::ranges::fill(*p.values, 0.0);
        },
        [](Model::SiteRef&) {});
    const Matrix y = m.forward(DenseTensor({1, 1, 16, 16, 3}));
    for (std::size_t c = 0; c < 5; ++c) CHECK(y(0, c) == m.head.bias[c]);
  }

  TEST_CASE("toy model matches the composed oracle") {
    for (std::uint64_t seed : oracle::kSeeds) {
      const ModelConfig cfg = two_stage();
      const Model m = Model::random(cfg, seed);
      const DenseTensor x = synthetic_input(cfg, 2, seed);
      Profiler prof;
      ForwardContext ctx;
      ctx.profiler = &prof;
      ctx.check_spikes = true;
      oracle::SopCounts counts;
      const Matrix got = m.forward(x, ctx);
      const Matrix want = oracle::model_naive(m, x, &counts);
      CHECK(test::max_abs_diff(got.data, want.data) <= 1e-4);
      CHECK(prof.report().total_sops == counts.sops);
    }
  }

  TEST_CASE("forward does not depend on the thread count") {
    const ModelConfig cfg = two_stage();
    const Model m = Model::random(cfg, 9);
    const DenseTensor x = synthetic_input(cfg, 3, 9);
    ForwardContext one;
    ForwardContext four;
    four.threads = 4;
    CHECK(m.forward(x, one).data == m.forward(x, four).data);
  }

  TEST_CASE("input shape is checked") {
    const Model m(two_stage());
    CHECK_THROWS_AS(m.forward(DenseTensor({1, 1, 8, 8, 3})), ShapeError);
  }

  TEST_CASE("weights file round trip") {
    const ModelConfig cfg = two_stage();
    const auto a = temp_path("spikevit_test_a.gstw");
    const auto b = temp_path("spikevit_test_b.gstw");
    save_weights(init_weights(cfg, 42), a);
    save_weights(load_weights(a), b);
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa == sb);
    CHECK(sa.substr(0, 4) == "GSTW");
    CHECK(Model::from_weights(cfg, load_weights(a)).to_weights().serialize() ==
          init_weights(cfg, 42).serialize());
    std::filesystem::remove(a);
    std::filesystem::remove(b);
    CHECK_THROWS_AS(load_weights(temp_path("spikevit_missing.gstw")), IoError);
  }

  TEST_CASE("malformed weight files") {
    const ModelConfig cfg = two_stage();
    const WeightContainer w = init_weights(cfg, 1);
    const std::vector<std::uint8_t> bytes = w.serialize();
    CHECK_THROWS_AS(WeightContainer::parse(std::span(bytes).first(bytes.size() - 3)),
                    TruncatedFileError);
    CHECK_THROWS_AS(WeightContainer::parse(std::span(bytes).first(3)), TruncatedFileError);
    std::vector<std::uint8_t> v = bytes;
    v[4] = 9;
    CHECK_THROWS_AS(WeightContainer::parse(v), VersionError);

    WeightContainer bad = w;
    bad.put("header.bias", WeightEntry::f32({4}, std::vector<float>(4)));
    try {
      (void)Model::from_weights(cfg, bad);
      FAIL("expected a shape mismatch");
    } catch (const ShapeMismatchError& e) {
      CHECK(std::string(e.what()).find("header.bias") != std::string::npos);
    }
    CHECK_THROWS_AS(Model::from_weights(cfg, without(w, "header.weight")), MissingEntryError);
    WeightContainer extra = w;
    extra.put("stray.weight", WeightEntry::f32({1}, {1.0f}));
    CHECK_THROWS_AS(Model::from_weights(cfg, extra), UnexpectedEntryError);
    CHECK_THROWS_AS(Model::from_weights(single_stage(), w), ConfigMismatchError);
  }

  TEST_CASE("synthetic input is seeded") {
    const ModelConfig cfg = two_stage();
    CHECK(synthetic_input(cfg, 2, 5).data()[7] == synthetic_input(cfg, 2, 5).data()[7]);
    CHECK(synthetic_input(cfg, 2, 5).data()[7] != synthetic_input(cfg, 2, 6).data()[7]);
  }
}

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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "spikevit/model.hpp"
#include "spikevit/profiler.hpp"

using namespace spikevit;

namespace {

ModelConfig toy() {
  ModelConfig cfg = preset("small");
  cfg.input_size = 32;
  cfg.classes = 10;
  for (StageConfig& s : cfg.stages) s.depth = 1;
  return cfg;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::ranges::count(s, '\n')); }

}  // namespace

TEST_SUITE("profiler") {
  TEST_CASE("layer sops") {
    CHECK(count_layer_sops(0, 7) == 0);
    CHECK(count_layer_sops(10, 5) == 50);
  }

  TEST_CASE("energy") {
    CHECK(energy_mj(1.29e9, 0) == doctest::Approx(1.161));
    CHECK(energy_mj(3.15e9, 0) == doctest::Approx(2.835));
    CHECK(energy_mj(0, 0) == 0.0);
    CHECK(energy_mj(0, 1e9) == doctest::Approx(4.6));
    // Linear in both counters.
    CHECK(energy_mj(3e8 + 5e7, 2e6 + 1e6) ==
          doctest::Approx(energy_mj(3e8, 2e6) + energy_mj(5e7, 1e6)).epsilon(1e-14));
  }

  TEST_CASE("upper bounds") {
    BoundQuery q;
    q.input = {4, 1, 28, 28, 96};
    q.max_spikes = 4;
    const std::uint64_t N = 28 * 28;
    CHECK(sop_upper_bound(BoundKind::attention_score, q) == 4 * N * N * 96);
    q.max_spikes = spikes_per_neuron(4, 2);
    q.spatial_groups = 16;
    CHECK(sop_upper_bound(BoundKind::attention_score, q) * 32 == 4 * N * N * 96);
    CHECK(sop_upper_bound(BoundKind::attention_value, q) == 2 * N * (N / 16) * 96);
    q.input = {4, 1, 1, 1, 96};
    q.spatial_groups = 1;
    CHECK(sop_upper_bound(BoundKind::attention_score, q) == 4 * 96 / 2);
    q.input = {4, 2, 7, 7, 10};
    q.max_spikes = 2;
    q.ratio = 4.0;
    CHECK(sop_upper_bound(BoundKind::ffn, q) == 2 * 2 * 49 * 10 * 40);
    q.out_channels = 6;
    CHECK(sop_upper_bound(BoundKind::pointwise, q) == 2 * 2 * 49 * 10 * 6);
    // 3x3 kernel, pad 1, 3x3 map: corners see 4 taps, edges 6, the centre 9.
    q.input = {1, 1, 3, 3, 1};
    q.max_spikes = 1;
    q.kernel = 3;
    q.padding = 1;
    CHECK(sop_upper_bound(BoundKind::depthwise, q) == 49);
    CHECK(sop_upper_bound(BoundKind::conv, q) == 49 * 6);
    CHECK(spikes_per_neuron(4, 2) == 2);
    CHECK(spikes_per_neuron(4, 3) == 2);
    CHECK(spikes_per_neuron(5, 2) == 3);
    CHECK(parse_bound_kind("attention_score") == BoundKind::attention_score);
    CHECK_THROWS_AS(parse_bound_kind("softmax"), ArgumentError);
  }

  TEST_CASE("empty report is a header") {
    const std::string csv = format_report_csv(Profiler().report());
    CHECK(csv == "stage,block_index,module_kind,sops,sop_upper_bound,macs,firing_rate,energy_mJ\n");
  }

  TEST_CASE("toy model report") {
    const ModelConfig cfg = toy();
    const Model m = Model::random(cfg, 42);
    Profiler prof;
    ForwardContext ctx;
    ctx.profiler = &prof;
    (void)m.forward(synthetic_input(cfg, 1, 42), ctx);
    const ProfileReport r = prof.report();
    // Two modules per block, a downsample row for stages 1b-4, stem and header.
    CHECK(r.modules.size() == 5 * 2 + 4 + 2);
    CHECK(lines(format_report_csv(r)) == r.modules.size() + 1);
    CHECK(r.modules.front().kind == "stem");
    CHECK(r.modules.back().kind == "header");
    std::uint64_t sops = 0;
    for (const ModuleEntry& e : r.modules) {
      CHECK(e.sops <= e.sop_upper_bound);
      if (e.kind != "stem" && e.kind != "header") {
        CHECK(e.macs == 0);
      } else {
        CHECK(e.macs > 0);
      }
      sops += e.sops;
    }
    CHECK(sops == r.total_sops);
    CHECK(r.energy_mj == doctest::Approx(energy_mj(static_cast<double>(r.total_sops),
                                                   static_cast<double>(r.total_macs))));
    CHECK(r.energy_mj - r.energy_mj_without_stem ==
          doctest::Approx(energy_mj(0, static_cast<double>(r.stem_macs))));
  }

  TEST_CASE("saturated run reaches every bound") {
    const ModelConfig cfg = toy();
    const Model m = Model::random(cfg, 1);
    Profiler prof;
    ForwardContext ctx;
    ctx.profiler = &prof;
    ctx.saturate = true;
    (void)m.forward(synthetic_input(cfg, 1, 1), ctx);
    for (const ModuleEntry& e : prof.report().modules) {
      if (e.kind == "stem" || e.kind == "header") continue;
      CHECK(e.sops == e.sop_upper_bound);
      CHECK(e.sop_upper_bound > 0);
    }
  }

  TEST_CASE("report files") {
    const auto path = std::filesystem::temp_directory_path() / "spikevit_profile_test.csv";
    Profiler prof;
    prof.enter("stage2", 0, "gw_ssa").counters.sops += 10;
    emit_report(prof.report(), path);
    std::ifstream f(path);
    const std::string text((std::istreambuf_iterator<char>(f)), {});
    CHECK(text == format_report_csv(prof.report()));
    CHECK(text.find("stage2,0,gw_ssa,10,0,0,0.000000,0.000000009") != std::string::npos);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(emit_report(prof.report(), "/nonexistent-dir/x/report.csv"), IoError);
  }
}

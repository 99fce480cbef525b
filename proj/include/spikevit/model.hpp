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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spikevit/blocks.hpp"
#include "spikevit/runtime.hpp"
#include "spikevit/tensor.hpp"
#include "spikevit/weights.hpp"

namespace spikevit {

struct StageConfig {
  std::string name;
  BlockKind kind = BlockKind::conv_b;
  std::size_t depth = 1;
  std::size_t channels = 8;
  bool downsample = false;  // 3x3 stride-2 conv from the previous width
  double r1 = 2.0;
  double r = 4.0;
  std::size_t heads = 1;
  double split_ratio = 0.5;
  std::size_t spatial_groups = 1;       // |G_S|, a perfect square
  std::size_t temporal_group_size = 0;  // 0: use the model-wide value

  bool operator==(const StageConfig&) const = default;
};

struct ModelConfig {
  std::string name = "custom";
  std::size_t input_size = 224;
  std::size_t in_channels = 3;
  std::size_t classes = 1000;
  std::size_t time_steps = 4;
  double alpha = 2.0;
  std::size_t temporal_group_size = 2;
  std::size_t stem_kernel = 7;
  std::size_t stem_stride = 2;
  double lambda = 1.0;
  std::vector<StageConfig> stages;

  // Throws ConfigError naming the first inconsistency.
  void validate() const;
  // Spatial size entering each stage (after its downsample).
  std::vector<std::size_t> stage_sizes() const;
  BlockConfig block_config(std::size_t stage) const;
  bool operator==(const ModelConfig&) const = default;
};

// "small", "base", "large"; ConfigError otherwise.
ModelConfig preset(std::string_view name);

// `key = value` lines, '#' comments, `[stage.N]` sections. A `preset` key
// in the global section starts from that preset; every other key overrides
// it. Errors carry the line number.
ModelConfig parse_config(std::string_view text);
ModelConfig load_config(const std::filesystem::path& path);
std::string format_config(const ModelConfig& cfg);
std::uint64_t config_hash(const ModelConfig& cfg);

struct ParamGroup {
  std::string module;  // e.g. "stage2.0.gw_ssa"
  std::size_t count = 0;
};

struct ParamCount {
  std::vector<ParamGroup> modules;
  std::size_t total = 0;
};

ParamCount count_params(const ModelConfig& cfg);

class Model {
 public:
  // Zero weights and default level sets.
  explicit Model(ModelConfig cfg);

  static Model from_weights(const ModelConfig& cfg, const WeightContainer& weights);
  static Model random(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  WeightContainer to_weights() const;

  // input: (1, B, H, W, in_channels) image; returns (B x classes) logits.
  Matrix forward(const DenseTensor& input, const ForwardContext& ctx = {}) const;

  struct ParamRef {
    std::string name;
    std::string module;
    std::vector<std::size_t> dims;
    std::vector<double>* values;
    std::size_t fan_in;
    bool is_bias;
  };
  struct SiteRef {
    std::string name;
    ExpLevelSet* levels;
  };
  // Every parameter slot and spiking site in a fixed order.
  void visit(const std::function<void(ParamRef&)>& on_param,
             const std::function<void(SiteRef&)>& on_site);
  ParamCount count_params() const;

  struct Stage {
    std::optional<DownsampleParams> down;
    std::vector<std::variant<ConvBlockParams, SsaBlockParams>> blocks;
  };
  ConvParams stem;
  std::vector<Stage> stages;
  LinearParams head;

 private:
  ModelConfig cfg_;
};

// Seeded Kaiming-uniform weights, biases uniform in +-1/sqrt(fan_in), lambda
// from the config at every site.
WeightContainer init_weights(const ModelConfig& cfg, std::uint64_t seed);

// Seeded uniform [0, 1) image batch of shape (1, B, size, size, channels).
DenseTensor synthetic_input(const ModelConfig& cfg, std::size_t batch, std::uint64_t seed);

}  // namespace spikevit

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

#include "spikevit/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace spikevit {

namespace {

std::size_t int_sqrt(std::size_t v) {
  std::size_t r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v))));
  return r * r == v ? r : 0;
}

StageConfig stage(std::string name, BlockKind kind, std::size_t depth, std::size_t channels,
                  bool down, std::size_t heads, std::size_t spatial_groups) {
  StageConfig s;
  s.name = std::move(name);
  s.kind = kind;
  s.depth = depth;
  s.channels = channels;
  s.downsample = down;
  s.heads = heads;
  s.spatial_groups = spatial_groups;
  return s;
}

const char* stage_kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::conv_b:
      return "conv_b";
    case BlockKind::ssa_b_gw:
      return "gw_ssa";
    case BlockKind::ssa_b_plain:
      return "ssa";
  }
  return "?";
}

}  // namespace

ModelConfig preset(std::string_view name) {
  std::size_t c[5];
  if (name == "small") {
    const std::size_t v[5] = {24, 48, 96, 192, 240};
    std::copy(v, v + 5, c);
  } else if (name == "base") {
    const std::size_t v[5] = {32, 64, 128, 256, 320};
    std::copy(v, v + 5, c);
  } else if (name == "large") {
    const std::size_t v[5] = {40, 80, 160, 320, 400};
    std::copy(v, v + 5, c);
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected small, base or large)");
  }
  ModelConfig cfg;
  cfg.name = std::string(name);
  cfg.stages = {
      stage("stage1a", BlockKind::conv_b, 1, c[0], false, 1, 1),
      stage("stage1b", BlockKind::conv_b, 1, c[1], true, 1, 1),
      stage("stage2", BlockKind::ssa_b_gw, 2, c[2], true, 4, 16),
      stage("stage3", BlockKind::ssa_b_gw, 6, c[3], true, 8, 4),
      stage("stage4", BlockKind::ssa_b_plain, 2, c[4], true, 8, 1),
  };
  return cfg;
}

std::vector<std::size_t> ModelConfig::stage_sizes() const {
  std::vector<std::size_t> sizes;
  const std::size_t pad = stem_kernel / 2;
  if (input_size + 2 * pad < stem_kernel) throw ConfigError("input is smaller than the stem kernel");
  std::size_t h = (input_size + 2 * pad - stem_kernel) / stem_stride + 1;
  for (const auto& s : stages) {
    if (s.downsample) {
      if (h % 2 != 0) {
        throw ConfigError("stage '" + s.name + "' downsamples an odd feature size " +
                          std::to_string(h));
      }
      h /= 2;
    }
    sizes.push_back(h);
  }
  return sizes;
}

BlockConfig ModelConfig::block_config(std::size_t i) const {
  const StageConfig& s = stages.at(i);
  BlockConfig b;
  b.kind = s.kind;
  b.channels = s.channels;
  b.r1 = s.r1;
  b.r = s.r;
  b.heads = s.heads;
  b.split_ratio = s.split_ratio;
  b.spatial_n = s.kind == BlockKind::ssa_b_gw ? int_sqrt(s.spatial_groups) : 1;
  b.time_steps = time_steps;
  b.alpha = alpha;
  b.temporal_group_size = s.temporal_group_size ? s.temporal_group_size : temporal_group_size;
  b.lambda = lambda;
  return b;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (input_size == 0 || in_channels == 0 || classes == 0) {
    fail("input_size, in_channels and classes must be positive");
  }
  if (time_steps == 0 || time_steps > 16) fail("time_steps must lie in [1, 16]");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be positive");
  if (temporal_group_size == 0) fail("temporal_group_size must be positive");
  if (stem_kernel == 0 || stem_stride == 0) fail("stem kernel and stride must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be positive");
  if (stages.empty()) fail("at least one stage is required");
  const auto sizes = stage_sizes();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const StageConfig& s = stages[i];
    const std::string at = "stage '" + s.name + "': ";
    if (s.depth == 0) fail(at + "depth must be positive");
    if (s.channels == 0) fail(at + "channels must be positive");
    if (s.heads == 0) fail(at + "heads must be positive");
    if (!(s.r1 >= 1.0) || !(s.r >= 1.0)) fail(at + "expansion ratios must be at least 1");
    if (!(s.split_ratio >= 0.0 && s.split_ratio <= 1.0)) fail(at + "split_ratio must lie in [0, 1]");
    if (i == 0 && s.downsample) fail(at + "the first stage takes the stem output directly");
    if (i > 0 && !s.downsample && s.channels != stages[i - 1].channels) {
      fail(at + "changes width without a downsample");
    }
    if (sizes[i] == 0) fail(at + "feature size collapsed to zero");
    if (s.kind == BlockKind::ssa_b_gw) {
      const std::size_t n = int_sqrt(s.spatial_groups);
      if (n == 0) fail(at + "spatial_groups must be a perfect square");
      if (sizes[i] % n != 0) {
        fail(at + "feature size " + std::to_string(sizes[i]) + " is not divisible into " +
             std::to_string(n) + " groups per side");
      }
      const auto plan = GroupingPlan::from_ratio(s.channels, s.split_ratio, n);
      if (plan.split_channel % s.heads || (s.channels - plan.split_channel) % s.heads) {
        fail(at + "attention halves are not divisible by the head count");
      }
    } else if (s.kind == BlockKind::ssa_b_plain) {
      if (s.channels % s.heads) fail(at + "channels are not divisible by the head count");
    }
  }
}

ModelConfig parse_config(std::string_view text) {
  struct Assign {
    long section;  // -1 global
    std::string key, value;
    std::size_t line;
  };
  std::vector<Assign> assigns;
  std::optional<std::string> base;
  long section = -1;
  std::size_t lineno = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']' || line.substr(1, 6) != "stage.") {
        throw ConfigError(where + "expected a [stage.N] section header");
      }
      const auto num = line.substr(7, line.size() - 8);
      long idx = -1;
      auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), idx);
      if (ec != std::errc{} || p != num.data() + num.size() || idx < 0 || idx > 64) {
        throw ConfigError(where + "invalid stage index '" + std::string(num) + "'");
      }
      section = idx;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (section < 0 && key == "preset") {
      base = value;
      continue;
    }
    assigns.push_back({section, key, value, lineno});
  }

  ModelConfig cfg = base ? preset(*base) : ModelConfig{};
  for (const Assign& a : assigns) {
    const std::string where = "line " + std::to_string(a.line) + ": ";
    auto as_size = [&]() {
      std::size_t v = 0;
      auto [p, ec] = std::from_chars(a.value.data(), a.value.data() + a.value.size(), v);
      if (ec != std::errc{} || p != a.value.data() + a.value.size()) {
        throw ConfigError(where + "'" + a.key + "' expects a non-negative integer, got '" + a.value + "'");
      }
      return v;
    };
    auto as_double = [&]() {
      double v = 0;
      auto [p, ec] = std::from_chars(a.value.data(), a.value.data() + a.value.size(), v);
      if (ec != std::errc{} || p != a.value.data() + a.value.size() || !std::isfinite(v)) {
        throw ConfigError(where + "'" + a.key + "' expects a number, got '" + a.value + "'");
      }
      return v;
    };
    auto as_bool = [&]() {
      if (a.value == "true" || a.value == "1") return true;
      if (a.value == "false" || a.value == "0") return false;
      throw ConfigError(where + "'" + a.key + "' expects true or false, got '" + a.value + "'");
    };
    if (a.section < 0) {
      if (a.key == "name") cfg.name = a.value;
      else if (a.key == "input_size") cfg.input_size = as_size();
      else if (a.key == "in_channels") cfg.in_channels = as_size();
      else if (a.key == "classes") cfg.classes = as_size();
      else if (a.key == "time_steps") cfg.time_steps = as_size();
      else if (a.key == "alpha") cfg.alpha = as_double();
      else if (a.key == "temporal_group_size") cfg.temporal_group_size = as_size();
      else if (a.key == "stem_kernel") cfg.stem_kernel = as_size();
      else if (a.key == "stem_stride") cfg.stem_stride = as_size();
      else if (a.key == "lambda") cfg.lambda = as_double();
      else throw ConfigError(where + "unknown key '" + a.key + "'");
      continue;
    }
    const auto idx = static_cast<std::size_t>(a.section);
    while (cfg.stages.size() <= idx) {
      StageConfig s;
      s.name = "stage" + std::to_string(cfg.stages.size());
      cfg.stages.push_back(s);
    }
    StageConfig& s = cfg.stages[idx];
    if (a.key == "name") s.name = a.value;
    else if (a.key == "kind") {
      if (a.value == "conv_b") s.kind = BlockKind::conv_b;
      else if (a.value == "gw_ssa") s.kind = BlockKind::ssa_b_gw;
      else if (a.value == "ssa") s.kind = BlockKind::ssa_b_plain;
      else throw ConfigError(where + "unknown stage kind '" + a.value + "' (conv_b, gw_ssa, ssa)");
    }
    else if (a.key == "depth") s.depth = as_size();
    else if (a.key == "channels") s.channels = as_size();
    else if (a.key == "downsample") s.downsample = as_bool();
    else if (a.key == "r1") s.r1 = as_double();
    else if (a.key == "r") s.r = as_double();
    else if (a.key == "heads") s.heads = as_size();
    else if (a.key == "split_ratio") s.split_ratio = as_double();
    else if (a.key == "spatial_groups") s.spatial_groups = as_size();
    else if (a.key == "temporal_group_size") s.temporal_group_size = as_size();
    else throw ConfigError(where + "unknown stage key '" + a.key + "'");
  }
  cfg.validate();
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ModelConfig& cfg) {
  std::string out;
  char buf[256];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out += "name = " + cfg.name + "\n";
  out += "input_size = " + std::to_string(cfg.input_size) + "\n";
  out += "in_channels = " + std::to_string(cfg.in_channels) + "\n";
  out += "classes = " + std::to_string(cfg.classes) + "\n";
  out += "time_steps = " + std::to_string(cfg.time_steps) + "\n";
  out += "alpha = " + num(cfg.alpha) + "\n";
  out += "temporal_group_size = " + std::to_string(cfg.temporal_group_size) + "\n";
  out += "stem_kernel = " + std::to_string(cfg.stem_kernel) + "\n";
  out += "stem_stride = " + std::to_string(cfg.stem_stride) + "\n";
  out += "lambda = " + num(cfg.lambda) + "\n";
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const StageConfig& s = cfg.stages[i];
    out += "\n[stage." + std::to_string(i) + "]\n";
    out += "name = " + s.name + "\n";
    out += std::string("kind = ") + stage_kind_name(s.kind) + "\n";
    out += "depth = " + std::to_string(s.depth) + "\n";
    out += "channels = " + std::to_string(s.channels) + "\n";
    out += std::string("downsample = ") + (s.downsample ? "true" : "false") + "\n";
    out += "r1 = " + num(s.r1) + "\n";
    out += "r = " + num(s.r) + "\n";
    out += "heads = " + std::to_string(s.heads) + "\n";
    out += "split_ratio = " + num(s.split_ratio) + "\n";
    out += "spatial_groups = " + std::to_string(s.spatial_groups) + "\n";
    out += "temporal_group_size = " + std::to_string(s.temporal_group_size) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const ModelConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : format_config(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t k = cfg_.stem_kernel;
  stem = ConvParams::make_full(cfg_.in_channels, cfg_.stages.front().channels, k, cfg_.stem_stride,
                               k / 2);
  std::size_t prev = cfg_.stages.front().channels;
  for (std::size_t i = 0; i < cfg_.stages.size(); ++i) {
    const StageConfig& sc = cfg_.stages[i];
    const BlockConfig bc = cfg_.block_config(i);
    Stage st;
    if (sc.downsample) {
      DownsampleParams d;
      d.sn = build_level_set(
          TemporalGrouping::contiguous(bc.time_steps, bc.temporal_group_size, bc.alpha), bc.lambda);
      d.conv = ConvParams::make_full(prev, sc.channels, 3, 2, 1);
      st.down = std::move(d);
    }
    for (std::size_t j = 0; j < sc.depth; ++j) {
      if (sc.kind == BlockKind::conv_b) st.blocks.emplace_back(make_conv_block(bc));
      else st.blocks.emplace_back(make_ssa_block(bc));
    }
    stages.push_back(std::move(st));
    prev = sc.channels;
  }
  head.in_features = prev;
  head.out_features = cfg_.classes;
  head.weights.assign(prev * cfg_.classes, 0.0);
  head.bias.assign(cfg_.classes, 0.0);
}

void Model::visit(const std::function<void(ParamRef&)>& on_param,
                  const std::function<void(SiteRef&)>& on_site) {
  auto conv = [&](const std::string& name, const std::string& module, ConvParams& p) {
    ParamRef w{name + ".weight", module, p.weight_dims(), &p.weights, p.fan_in(), false};
    on_param(w);
    if (!p.bias.empty()) {
      ParamRef b{name + ".bias", module, {p.out_channels}, &p.bias, p.fan_in(), true};
      on_param(b);
    }
  };
  auto site = [&](const std::string& name, ExpLevelSet& ls) {
    SiteRef s{name, &ls};
    on_site(s);
  };
  auto conv_ffn = [&](const std::string& pre, const std::string& module, ConvFfnParams& f) {
    site(pre + ".sn_in", f.sn_in);
    site(pre + ".sn_sym", f.sn_sym);
    site(pre + ".sn_hidden", f.sn_hidden);
    conv(pre + ".expand", module, f.expand);
    conv(pre + ".dw", module, f.depthwise);
    conv(pre + ".project", module, f.project);
  };

  conv("stem", "stem", stem);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string sname = cfg_.stages[i].name;
    const std::string pre = "stages." + std::to_string(i);
    Stage& st = stages[i];
    if (st.down) {
      site(pre + ".down.sn", st.down->sn);
      conv(pre + ".down", sname + ".downsample", st.down->conv);
    }
    for (std::size_t j = 0; j < st.blocks.size(); ++j) {
      const std::string bp = pre + ".blocks." + std::to_string(j);
      const std::string mod = sname + "." + std::to_string(j) + ".";
      if (auto* cb = std::get_if<ConvBlockParams>(&st.blocks[j])) {
        site(bp + ".sn_in", cb->sn_in);
        site(bp + ".sn_mid", cb->sn_mid);
        conv(bp + ".conv1", mod + "sconv", cb->conv1);
        conv(bp + ".conv2", mod + "sconv", cb->conv2);
        conv_ffn(bp + ".ffn", mod + "conv_sffn", cb->ffn);
      } else {
        auto& sb = std::get<SsaBlockParams>(st.blocks[j]);
        const bool gw = sb.kind == BlockKind::ssa_b_gw;
        const std::string amod = mod + (gw ? "gw_ssa" : "ssa");
        GwSsaParams& a = sb.attention;
        site(bp + ".attn.sn_in", a.sn_in);
        site(bp + ".attn.sn_q", a.sn_q);
        site(bp + ".attn.sn_score", a.sn_score);
        if (gw) site(bp + ".attn.sn_value", a.sn_value);
        site(bp + ".attn.sn_out", a.sn_out);
        conv(bp + ".attn.q", amod, a.q);
        conv(bp + ".attn.k", amod, a.k);
        conv(bp + ".attn.v", amod, a.v);
        if (gw) conv(bp + ".attn.dw", amod, a.depthwise);
        conv(bp + ".attn.project", amod, a.project);
        if (gw) {
          conv_ffn(bp + ".ffn", mod + "conv_sffn", sb.conv_ffn);
        } else {
          site(bp + ".ffn.sn_in", sb.ffn.sn_in);
          site(bp + ".ffn.sn_hidden", sb.ffn.sn_hidden);
          conv(bp + ".ffn.expand", mod + "sffn", sb.ffn.expand);
          conv(bp + ".ffn.project", mod + "sffn", sb.ffn.project);
        }
      }
    }
  }
  ParamRef hw{"header.weight", "header", {head.in_features, head.out_features}, &head.weights,
              head.in_features, false};
  on_param(hw);
  ParamRef hb{"header.bias", "header", {head.out_features}, &head.bias, head.in_features, true};
  on_param(hb);
}

ParamCount Model::count_params() const {
  ParamCount pc;
  const_cast<Model*>(this)->visit(
      [&](ParamRef& p) {
        std::size_t n = 1;
        for (auto d : p.dims) n *= d;
        if (pc.modules.empty() || pc.modules.back().module != p.module) {
          pc.modules.push_back({p.module, 0});
        }
        pc.modules.back().count += n;
        pc.total += n;
      },
      [](SiteRef&) {});
  return pc;
}

ParamCount count_params(const ModelConfig& cfg) { return Model(cfg).count_params(); }

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

std::vector<std::uint32_t> encode_groups(const TemporalGrouping& g) {
  std::vector<std::uint32_t> out{static_cast<std::uint32_t>(g.groups.size())};
  for (const auto& grp : g.groups) {
    out.push_back(static_cast<std::uint32_t>(grp.size()));
    for (auto t : grp) out.push_back(static_cast<std::uint32_t>(t));
  }
  return out;
}

TemporalGrouping decode_groups(const std::vector<std::uint32_t>& v, std::size_t T, double alpha,
                               const std::string& site) {
  TemporalGrouping g;
  g.time_steps = T;
  g.alpha = alpha;
  g.groups.clear();
  auto bad = [&]() -> TemporalGrouping {
    throw WeightFileError("malformed grouping metadata for site '" + site + "'");
  };
  if (v.empty()) return bad();
  std::size_t pos = 1;
  for (std::uint32_t i = 0; i < v[0]; ++i) {
    if (pos >= v.size()) return bad();
    const std::size_t len = v[pos++];
    if (v.size() - pos < len) return bad();
    g.groups.emplace_back(v.begin() + static_cast<long>(pos), v.begin() + static_cast<long>(pos + len));
    pos += len;
  }
  if (pos != v.size()) return bad();
  return g;
}

template <class T>
const std::vector<T>& typed(const WeightEntry& e, const std::string& name) {
  const auto* v = std::get_if<std::vector<T>>(&e.values);
  if (!v) throw ShapeMismatchError("entry '" + name + "' has the wrong dtype");
  return *v;
}

}  // namespace

WeightContainer Model::to_weights() const {
  WeightContainer w;
  const std::uint64_t h = config_hash(cfg_);
  w.put("meta/config_hash", WeightEntry::u32({static_cast<std::uint32_t>(h & 0xFFFFFFFFu),
                                              static_cast<std::uint32_t>(h >> 32)}));
  const_cast<Model*>(this)->visit(
      [&](ParamRef& p) {
        std::vector<std::uint32_t> dims(p.dims.begin(), p.dims.end());
        std::vector<float> v(p.values->begin(), p.values->end());
        w.put(p.name, WeightEntry::f32(std::move(dims), std::move(v)));
      },
      [&](SiteRef& s) {
        const ExpLevelSet& ls = *s.levels;
        const std::string m = "meta/" + s.name;
        w.put(m + "/lambda", WeightEntry::f64({ls.lambda()}));
        w.put(m + "/alpha", WeightEntry::f64({ls.alpha()}));
        w.put(m + "/time_steps", WeightEntry::u32({static_cast<std::uint32_t>(ls.time_steps())}));
        w.put(m + "/groups", WeightEntry::u32(encode_groups(ls.grouping())));
      });
  return w;
}

Model Model::from_weights(const ModelConfig& cfg, const WeightContainer& w) {
  Model m(cfg);
  const auto& hash_v = typed<std::uint32_t>(w.get("meta/config_hash"), "meta/config_hash");
  const std::uint64_t h = config_hash(cfg);
  if (hash_v.size() != 2 || hash_v[0] != static_cast<std::uint32_t>(h & 0xFFFFFFFFu) ||
      hash_v[1] != static_cast<std::uint32_t>(h >> 32)) {
    throw ConfigMismatchError("weight file was produced for a different model config");
  }
  std::set<std::string, std::less<>> expected{"meta/config_hash"};
  m.visit(
      [&](ParamRef& p) {
        expected.insert(p.name);
        const WeightEntry& e = w.get(p.name);
        std::vector<std::uint32_t> dims(p.dims.begin(), p.dims.end());
        if (e.dims != dims) {
          std::string want, got;
          for (auto d : dims) want += (want.empty() ? "" : "x") + std::to_string(d);
          for (auto d : e.dims) got += (got.empty() ? "" : "x") + std::to_string(d);
          throw ShapeMismatchError("entry '" + p.name + "' has shape " + got + ", expected " + want);
        }
        const auto& v = typed<float>(e, p.name);
        p.values->assign(v.begin(), v.end());
      },
      [&](SiteRef& s) {
        const std::string pre = "meta/" + s.name;
        for (const char* k : {"/lambda", "/alpha", "/time_steps", "/groups"}) expected.insert(pre + k);
        const auto& lam = typed<double>(w.get(pre + "/lambda"), pre + "/lambda");
        const auto& alpha = typed<double>(w.get(pre + "/alpha"), pre + "/alpha");
        const auto& ts = typed<std::uint32_t>(w.get(pre + "/time_steps"), pre + "/time_steps");
        const auto& groups = typed<std::uint32_t>(w.get(pre + "/groups"), pre + "/groups");
        if (lam.size() != 1 || alpha.size() != 1 || ts.size() != 1) {
          throw ShapeMismatchError("level-set metadata of '" + s.name + "' must be scalars");
        }
        if (ts[0] != cfg.time_steps) {
          throw ConfigMismatchError("site '" + s.name + "' stores " + std::to_string(ts[0]) +
                                    " time-steps, config has " + std::to_string(cfg.time_steps));
        }
        try {
          ExpLevelSet ls = build_level_set(decode_groups(groups, ts[0], alpha[0], s.name), lam[0]);
          *s.levels = s.levels->is_symmetric() ? symmetric_level_set(ls) : ls;
        } catch (const WeightFileError&) {
          throw;
        } catch (const Error& e) {
          throw WeightFileError("invalid level set for site '" + s.name + "': " + e.what());
        }
      });
  for (const auto& [name, e] : w.entries()) {
    if (!expected.count(name)) throw UnexpectedEntryError("unexpected entry '" + name + "'");
  }
  return m;
}

Model Model::random(const ModelConfig& cfg, std::uint64_t seed) {
  return from_weights(cfg, init_weights(cfg, seed));
}

WeightContainer init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  Model m(cfg);
  m.visit(
      [&](Model::ParamRef& p) {
        std::mt19937_64 gen(splitmix64(seed ^ fnv1a(p.name)));
        const double fan = static_cast<double>(std::max<std::size_t>(p.fan_in, 1));
        const double bound = p.is_bias ? 1.0 / std::sqrt(fan) : std::sqrt(6.0 / fan);
        for (double& v : *p.values) {
          v = static_cast<float>((2.0 * unit_uniform(gen) - 1.0) * bound);
        }
      },
      [](Model::SiteRef&) {});
  return m.to_weights();
}

Matrix Model::forward(const DenseTensor& input, const ForwardContext& ctx) const {
  const TensorShape& s = input.shape();
  if (s.t != 1 || s.h != cfg_.input_size || s.w != cfg_.input_size || s.c != cfg_.in_channels) {
    throw ShapeError("model expects input (1, B, " + std::to_string(cfg_.input_size) + ", " +
                     std::to_string(cfg_.input_size) + ", " + std::to_string(cfg_.in_channels) +
                     "), got (" + std::to_string(s.t) + ", " + std::to_string(s.b) + ", " +
                     std::to_string(s.h) + ", " + std::to_string(s.w) + ", " +
                     std::to_string(s.c) + ")");
  }
  DenseTensor x;
  {
    // The image is a constant current, so the stem runs once and is repeated
    // over time.
    ModuleScope scope(ctx, "stem", 0, "stem");
    x = broadcast_time(conv2d(input, stem, ctx), cfg_.time_steps);
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string& name = cfg_.stages[i].name;
    if (stages[i].down) {
      ModuleScope scope(ctx, name, 0, "downsample");
      x = downsample(x, *stages[i].down, ctx);
    }
    for (std::size_t j = 0; j < stages[i].blocks.size(); ++j) {
      const BlockTag tag{name, static_cast<int>(j)};
      if (const auto* cb = std::get_if<ConvBlockParams>(&stages[i].blocks[j])) {
        x = conv_b(x, *cb, ctx, tag);
      } else {
        x = ssa_b(x, std::get<SsaBlockParams>(stages[i].blocks[j]), ctx, tag);
      }
    }
  }
  ModuleScope scope(ctx, "header", 0, "header");
  return header(x, head, ctx);
}

DenseTensor synthetic_input(const ModelConfig& cfg, std::size_t batch, std::uint64_t seed) {
  if (batch == 0) throw ArgumentError("batch must be positive");
  DenseTensor x(TensorShape{1, batch, cfg.input_size, cfg.input_size, cfg.in_channels});
  std::mt19937_64 gen(splitmix64(seed));
  for (double& v : x.data()) v = unit_uniform(gen);
  return x;
}

}  // namespace spikevit

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

#include "spikevit/verify.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ostream>
#include <random>
#include <sstream>

#include "spikevit/attention.hpp"
#include "spikevit/blocks.hpp"
#include "spikevit/errors.hpp"
#include "spikevit/exp_coding.hpp"
#include "spikevit/model.hpp"
#include "spikevit/neuron.hpp"
#include "spikevit/oracle.hpp"
#include "spikevit/profiler.hpp"
#include "spikevit/weights.hpp"

namespace spikevit::verify {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g_); }

 private:
  std::mt19937_64 g_;
};

// Collects failures; the outcome keeps the first few messages.
class Tally {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ << (failures_ > 1 ? "; " : "") << what;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  Outcome outcome() const {
    Outcome o;
    o.pass = failures_ == 0;
    std::ostringstream d;
    if (failures_ == 0) {
      d << checks_ << " checks";
    } else {
      d << failures_ << "/" << checks_ << " failed: " << messages_.str();
    }
    if (!notes_.empty()) d << " (" << notes_ << ")";
    o.detail = d.str();
    return o;
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::ostringstream messages_;
  std::string notes_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// Error relative to the magnitude of the reference (absolute below 1).
double scaled_error(std::span<const double> got, std::span<const double> want) {
  return max_abs_diff(got, want) / std::max(1.0, max_abs(want));
}

bool bit_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

DenseTensor random_tensor(const TensorShape& s, Rng& rng, double lo, double hi) {
  DenseTensor x(s);
  for (double& v : x.data()) v = rng.uniform(lo, hi);
  return x;
}

void randomize(ConvParams& p, Rng& rng) {
  const double w = std::sqrt(6.0 / static_cast<double>(p.fan_in()));
  const double b = 1.0 / std::sqrt(static_cast<double>(p.fan_in()));
  for (double& v : p.weights) v = rng.uniform(-w, w);
  for (double& v : p.bias) v = rng.uniform(-b, b);
}

void relambda(ExpLevelSet& ls, double lambda) {
  ExpLevelSet fresh = build_level_set(ls.grouping(), lambda);
  ls = ls.is_symmetric() ? symmetric_level_set(fresh) : fresh;
}

void randomize(ConvFfnParams& p, Rng& rng) {
  for (ExpLevelSet* ls : {&p.sn_in, &p.sn_sym, &p.sn_hidden}) relambda(*ls, rng.uniform(0.5, 2.0));
  for (ConvParams* c : {&p.expand, &p.depthwise, &p.project}) randomize(*c, rng);
}

void randomize(FfnParams& p, Rng& rng) {
  for (ExpLevelSet* ls : {&p.sn_in, &p.sn_hidden}) relambda(*ls, rng.uniform(0.5, 2.0));
  for (ConvParams* c : {&p.expand, &p.project}) randomize(*c, rng);
}

void randomize(GwSsaParams& p, Rng& rng) {
  for (ExpLevelSet* ls : {&p.sn_in, &p.sn_q, &p.sn_score, &p.sn_out}) {
    relambda(*ls, rng.uniform(0.5, 2.0));
  }
  if (p.conv_path) relambda(p.sn_value, rng.uniform(0.5, 2.0));
  for (ConvParams* c : {&p.q, &p.k, &p.v, &p.project}) randomize(*c, rng);
  if (p.conv_path) randomize(p.depthwise, rng);
}

void randomize(SsaBlockParams& p, Rng& rng) {
  randomize(p.attention, rng);
  if (p.kind == BlockKind::ssa_b_gw) {
    randomize(p.conv_ffn, rng);
  } else {
    randomize(p.ffn, rng);
  }
}

void randomize(ConvBlockParams& p, Rng& rng) {
  relambda(p.sn_in, rng.uniform(0.5, 2.0));
  relambda(p.sn_mid, rng.uniform(0.5, 2.0));
  randomize(p.conv1, rng);
  randomize(p.conv2, rng);
  randomize(p.ffn, rng);
}

// Restricted growth strings enumerate every set partition of {0..T-1}.
std::vector<TemporalGrouping> all_partitions(std::size_t T, double alpha) {
  std::vector<TemporalGrouping> out;
  std::vector<std::size_t> label(T, 0);
  while (true) {
    TemporalGrouping g;
    g.time_steps = T;
    g.alpha = alpha;
    g.groups.clear();
    for (std::size_t t = 0; t < T; ++t) {
      if (label[t] >= g.groups.size()) g.groups.resize(label[t] + 1);
      g.groups[label[t]].push_back(t);
    }
    out.push_back(std::move(g));
    // Next string: increment the last position that may grow.
    std::size_t i = T;
    while (i-- > 1) {
      const std::size_t cap = *std::max_element(label.begin(), label.begin() + i) + 1;
      if (label[i] < cap) {
        ++label[i];
        std::fill(label.begin() + i + 1, label.end(), 0);
        break;
      }
    }
    if (i == 0 || i > T) break;
  }
  return out;
}

std::vector<TemporalGrouping> contiguous_groupings(std::size_t max_t, double alpha) {
  std::vector<TemporalGrouping> out;
  for (std::size_t T = 1; T <= max_t; ++T) {
    for (std::size_t gs = 1; gs <= T; ++gs) out.push_back(TemporalGrouping::contiguous(T, gs, alpha));
  }
  return out;
}

std::string describe(const TemporalGrouping& g) {
  std::ostringstream s;
  s << "T=" << g.time_steps << " {";
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    s << (i ? "|" : "");
    for (std::size_t j = 0; j < g.groups[i].size(); ++j) s << (j ? "," : "") << g.groups[i][j];
  }
  s << "}";
  return s.str();
}

std::size_t ceil_log2(std::size_t n) {
  std::size_t b = 0;
  while ((std::size_t{1} << b) < n) ++b;
  return b;
}

// Checks that `model` reproduces the real-valued oracle on an input batch.
void compare_model(Tally& tally, const Model& m, const DenseTensor& input, int threads,
                   const std::string& label) {
  Profiler prof;
  ForwardContext ctx;
  ctx.threads = threads;
  ctx.profiler = &prof;
  const Matrix got = m.forward(input, ctx);
  oracle::SopCounts counts;
  const Matrix want = oracle::model_naive(m, input, &counts);
  const double err = scaled_error(got.data, want.data);
  tally.expect(err <= 1e-9, label + " logits differ by " + fmt(err));
  tally.expect(prof.report().total_sops == counts.sops,
               label + " sops " + std::to_string(prof.report().total_sops) + " vs " +
                   std::to_string(counts.sops));
}

ModelConfig toy_config(std::size_t input) {
  ModelConfig cfg = preset("small");
  cfg.name = "toy";
  cfg.input_size = input;
  cfg.classes = 10;
  for (StageConfig& s : cfg.stages) s.depth = 1;
  return cfg;
}

// Runs one Stage-2 shaped attention block and returns the profiler row.
ModuleEntry stage2_attention(std::size_t spatial_n, std::size_t temporal_group, bool saturate,
                             int threads, std::uint64_t seed) {
  BlockConfig cfg;
  cfg.kind = BlockKind::ssa_b_gw;
  cfg.channels = 96;
  cfg.heads = 4;
  cfg.spatial_n = spatial_n;
  cfg.time_steps = 4;
  cfg.temporal_group_size = temporal_group;
  SsaBlockParams p = make_ssa_block(cfg);
  Rng rng(seed);
  randomize(p, rng);
  const DenseTensor x = random_tensor({4, 1, 28, 28, 96}, rng, -1.0, 2.0);
  Profiler prof;
  ForwardContext ctx;
  ctx.threads = threads;
  ctx.profiler = &prof;
  ctx.saturate = saturate;
  (void)ssa_b(x, p, ctx, {"stage2", 0});
  const ProfileReport r = prof.report();
  const ModuleEntry* e = r.find("stage2", 0, "gw_ssa");
  if (e == nullptr) throw ContractError("attention module missing from the report");
  ModuleEntry out = *e;
  // Fold the feed-forward row's general multiplies into the same entry.
  if (const ModuleEntry* f = r.find("stage2", 0, "conv_sffn")) {
    out.multiplies += f->multiplies;
    out.macs += f->macs;
  }
  return out;
}

struct Forward {
  Matrix logits;
  std::string csv;
  double seconds = 0.0;
};

Forward run_forward(const Model& m, const DenseTensor& x, int threads) {
  Profiler prof;
  ForwardContext ctx;
  ctx.threads = threads;
  ctx.profiler = &prof;
  const auto start = Clock::now();
  Forward f;
  f.logits = m.forward(x, ctx);
  f.seconds = seconds_since(start);
  f.csv = format_report_csv(prof.report());
  return f;
}

// ---- checks without an acceptance counterpart ----

Outcome regroup_round_trip() {
  Tally tally;
  Rng rng(11);
  for (std::size_t side : {4, 8, 12, 28}) {
    for (std::size_t n : {1, 2, 4, 7}) {
      if (side % n != 0) continue;
      const DenseTensor x = random_tensor({2, 2, side, side, 3}, rng, -1, 1);
      for (GroupMode mode : {GroupMode::strided, GroupMode::window}) {
        const std::vector<DenseTensor> groups = make_groups(x, mode, n);
        bool sizes = groups.size() == n * n;
        for (const DenseTensor& g : groups) {
          sizes = sizes && g.shape().tokens() == side * side / (n * n);
        }
        tally.expect(sizes, "group sizes for side " + std::to_string(side));
        const DenseTensor back = regroup(groups, mode, n, x.shape());
        tally.expect(bit_equal(back.data(), x.data()),
                     "regroup side " + std::to_string(side) + " n " + std::to_string(n));
      }
    }
  }
  // Strided groups hold tokens with equal (y mod n, x mod n).
  const DenseTensor x = random_tensor({1, 1, 8, 8, 1}, rng, -1, 1);
  const std::vector<DenseTensor> g = strided_groups(x, 2);
  tally.expect(g[3].at(0, 0, 1, 2, 0) == x.at(0, 0, 3, 5, 0), "strided token placement");
  const std::vector<DenseTensor> w = window_groups(x, 2);
  tally.expect(w[3].at(0, 0, 1, 2, 0) == x.at(0, 0, 5, 6, 0), "window token placement");
  return tally.outcome();
}

Outcome channel_ops() {
  Tally tally;
  Rng rng(12);
  const DenseTensor x = random_tensor({2, 1, 3, 3, 7}, rng, -1, 1);
  for (std::size_t split = 0; split <= 7; ++split) {
    auto [lo, hi] = channel_split(x, split);
    tally.expect(lo.shape().c == split && hi.shape().c == 7 - split, "split widths");
    tally.expect(bit_equal(channel_concat(lo, hi).data(), x.data()), "concat after split");
  }
  const DenseTensor s = temporal_sum(x);
  const DenseTensor a = temporal_average(x);
  double err = 0.0;
  for (std::size_t i = 0; i < s.data().size(); ++i) {
    const double want = x.data()[i] + x.data()[i + s.data().size()];
    err = std::max({err, std::fabs(s.data()[i] - want), std::fabs(a.data()[i] - want / 2)});
  }
  tally.expect(err < 1e-15, "temporal reductions");
  bool threw = false;
  try {
    (void)channel_split(x, 8);
  } catch (const BoundsError&) {
    threw = true;
  }
  tally.expect(threw, "split beyond the channel count is rejected");
  return tally.outcome();
}

Outcome neuron_traces() {
  Tally tally;
  // Hand-computed IF trace: theta 1, v0 0.5.
  const NeuronParams p = NeuronParams::integrate_and_fire(1.0);
  const std::vector<double> in = {0.6, 0.2, 0.9, -0.3};
  const NeuronTrace tr = run_sequence(p, in);
  tally.expect(tr.s == std::vector<int>({1, 0, 1, 0}), "spike train of the IF example");
  tally.expect(std::fabs(tr.v.back() + 0.1) < 1e-12, "final potential of the IF example");
  NeuronParams hard = p;
  hard.reset = ResetMode::hard;
  const NeuronTrace th = run_sequence(hard, in);
  tally.expect(th.v[0] == 0.0 && th.v[2] == 0.0, "hard reset returns to zero");
  NeuronParams leaky = p;
  leaky.mu = 0.5;
  const StepResult r = step(leaky, 0.4, 0.1);
  tally.expect(std::fabs(r.m - 0.3) < 1e-15 && r.s == 0, "leak scales the previous potential");
  return tally.outcome();
}

Outcome level_sets() {
  Tally tally;
  std::size_t sets = 0;
  for (double alpha : {2.0, 3.0}) {
    for (std::size_t T = 1; T <= 6; ++T) {
      for (const TemporalGrouping& g : all_partitions(T, alpha)) {
        ++sets;
        const ExpLevelSet ls = build_level_set(g, 1.0);
        const std::vector<double> want = oracle::level_enum(g);
        const bool same = std::equal(ls.levels().begin(), ls.levels().end(), want.begin(),
                                     want.end());
        tally.expect(same, "levels of " + describe(g));
        for (std::size_t i = 0; i < ls.levels().size(); ++i) {
          double sum = 0.0;
          const std::uint32_t mask = ls.spike_mask(i);
          for (std::size_t t = 0; t < T; ++t) {
            if (mask & (1u << t)) sum += ls.amplitudes()[t];
          }
          const std::vector<std::uint32_t> d = oracle::decompositions(ls.levels()[i], g);
          tally.expect(sum == ls.levels()[i] && std::find(d.begin(), d.end(), mask) != d.end(),
                       "mask of level " + fmt(ls.levels()[i]) + " in " + describe(g));
        }
      }
    }
  }
  tally.note(std::to_string(sets) + " groupings");
  return tally.outcome();
}

Outcome fire_matches_oracle() {
  Tally tally;
  for (std::uint64_t seed : oracle::kSeeds) {
    Rng rng(seed);
    for (std::size_t T : {1, 2, 4, 5}) {
      for (bool symmetric : {false, true}) {
        const std::size_t gs = 1 + rng.index(T);
        ExpLevelSet ls = build_level_set(TemporalGrouping::contiguous(T, gs), rng.uniform(0.5, 2));
        if (symmetric) ls = symmetric_level_set(ls);
        const double gain = rng.uniform(0.5, 3.0);
        const DenseTensor cur = random_tensor({T, 2, 3, 3, 5}, rng, -2, 4);
        FireOptions opts;
        opts.input_gain = gain;
        FireStats stats;
        const SpikeTensor s = fire(cur, ls, opts, &stats);
        DenseTensor scaled = cur;
        for (double& v : scaled.data()) v *= gain;
        std::uint64_t nonzero = 0;
        const DenseTensor want = oracle::spike_values(scaled, oracle::LevelSpec::of(ls), &nonzero);
        tally.expect(scaled_error(s.values().data(), want.data()) < 1e-12,
                     "fire values T=" + std::to_string(T));
        tally.expect(stats.nonzero == nonzero && s.count_nonzero() == nonzero, "nonzero count");
        s.check_amplitudes();
      }
    }
  }
  return tally.outcome();
}

Outcome conv_matches_oracle(const Options& o) {
  Tally tally;
  for (std::uint64_t seed : oracle::kSeeds) {
    Rng rng(seed);
    const std::vector<ConvParams> shapes = {
        ConvParams::make_pointwise(6, 5),
        ConvParams::make_pointwise(6, 4, false),
        ConvParams::make_depthwise(6, 3),
        ConvParams::make_full(6, 4, 3, 1, 1),
        ConvParams::make_full(6, 4, 3, 2, 1),
        ConvParams::make_full(6, 3, 7, 2, 3),
    };
    for (ConvParams p : shapes) {
      randomize(p, rng);
      for (std::size_t side : {5, 8}) {
        const DenseTensor cur = random_tensor({2, 2, side, side, 6}, rng, -1, 2);
        ForwardContext ctx;
        ctx.threads = o.threads;
        const std::string label = "conv k" + std::to_string(p.kernel) + " s" +
                                  std::to_string(p.stride) + " side " + std::to_string(side);
        const DenseTensor dense = conv2d(cur, p, ctx);
        tally.expect(scaled_error(dense.data(), oracle::conv_naive(cur, p).data()) < 1e-12,
                     label + " dense");
        for (bool symmetric : {false, true}) {
          ExpLevelSet ls = build_level_set(TemporalGrouping::contiguous(2, 1), rng.uniform(0.5, 2));
          if (symmetric) ls = symmetric_level_set(ls);
          const SpikeTensor s = fire(cur, ls);
          const double gain = rng.uniform(0.5, 2.0);
          Profiler prof;
          prof.enter("t", 0, "conv");
          ForwardContext sctx = ctx;
          sctx.profiler = &prof;
          const DenseTensor got = conv2d(s, p, sctx, gain);
          std::uint64_t acc = 0;
          DenseTensor want = oracle::conv_naive(s.values(), p, &acc);
          for (double& v : want.data()) v *= gain;
          tally.expect(scaled_error(got.data(), want.data()) < 1e-12, label + " spike");
          const ModuleEntry& e = prof.report().modules.at(0);
          tally.expect(e.sops == acc, label + " sops " + std::to_string(e.sops) + " vs " +
                                          std::to_string(acc));
          tally.expect(e.multiplies == 0 && e.macs == 0, label + " spike path multiplies");
        }
      }
    }
  }
  return tally.outcome();
}

Outcome ssa_forms() {
  Tally tally;
  for (std::uint64_t seed : oracle::kSeeds) {
    Rng rng(seed);
    const TensorShape s{4, 2, 3, 3, 8};
    const DenseTensor q = random_tensor(s, rng, -1, 1);
    const DenseTensor k = random_tensor(s, rng, -1, 1);
    const DenseTensor v = random_tensor(s, rng, -1, 1);
    const ExpLevelSet f = build_level_set(TemporalGrouping::contiguous(4, 2), 0.5);
    for (bool with_f : {false, true}) {
      AttentionConfig cfg;
      cfg.heads = 2;
      if (with_f) cfg.activation = f;
      const ExpLevelSet* fp = with_f ? &f : nullptr;
      const DenseTensor conv = ssa_conversion(q, k, v, cfg);
      const DenseTensor want = oracle::ssa_rate_naive(temporal_average(q), temporal_average(k),
                                                      temporal_average(v), 2, fp);
      tally.expect(scaled_error(conv.data(), want.data()) < 1e-12, "conversion form");
      const DenseTensor expanded = temporal_average(ssa_conversion_expanded(q, k, v, cfg));
      tally.expect(scaled_error(expanded.data(), conv.data()) < 1e-12,
                   std::string("expanded form mean") + (with_f ? " with f" : ""));
      const DenseTensor stbp = ssa_stbp(q, k, v, cfg);
      tally.expect(scaled_error(stbp.data(), oracle::ssa_stbp_naive(q, k, v, 2, fp).data()) < 1e-12,
                   "per-step form");
    }
  }
  return tally.outcome();
}

Outcome blocks_match_oracle(const Options& o) {
  Tally tally;
  for (std::uint64_t seed : oracle::kSeeds) {
    Rng rng(seed);
    for (BlockKind kind : {BlockKind::conv_b, BlockKind::ssa_b_gw, BlockKind::ssa_b_plain}) {
      for (std::size_t T : {1, 4}) {
        BlockConfig cfg;
        cfg.kind = kind;
        cfg.channels = 16;
        cfg.heads = 2;
        cfg.spatial_n = 2;
        cfg.time_steps = T;
        cfg.temporal_group_size = std::min<std::size_t>(2, T);
        const DenseTensor x = random_tensor({T, 2, 8, 8, 16}, rng, -1, 2);
        Profiler prof;
        ForwardContext ctx;
        ctx.threads = o.threads;
        ctx.profiler = &prof;
        oracle::SopCounts counts;
        DenseTensor got;
        DenseTensor want;
        if (kind == BlockKind::conv_b) {
          ConvBlockParams p = make_conv_block(cfg);
          randomize(p, rng);
          got = conv_b(x, p, ctx);
          want = oracle::conv_b_naive(x, p, &counts);
        } else {
          SsaBlockParams p = make_ssa_block(cfg);
          randomize(p, rng);
          got = ssa_b(x, p, ctx);
          want = oracle::ssa_b_naive(x, p, &counts);
        }
        const std::string label = std::string(to_string(kind)) + " T=" + std::to_string(T);
        tally.expect(scaled_error(got.data(), want.data()) < 1e-9, label + " output");
        tally.expect(prof.report().total_sops == counts.sops, label + " sops");
      }
    }
    LinearParams head;
    head.in_features = 16;
    head.out_features = 5;
    head.weights.resize(80);
    head.bias.resize(5);
    for (double& v : head.weights) v = rng.uniform(-1, 1);
    for (double& v : head.bias) v = rng.uniform(-1, 1);
    const DenseTensor x = random_tensor({4, 3, 2, 2, 16}, rng, -1, 1);
    const Matrix got = header(x, head, {});
    tally.expect(scaled_error(got.data, oracle::header_naive(x, head).data) < 1e-12, "header");
  }
  return tally.outcome();
}

Outcome model_matches_oracle(const Options& o) {
  Tally tally;
  for (std::uint64_t seed : oracle::kSeeds) {
    const ModelConfig cfg = toy_config(32);
    const Model m = Model::random(cfg, seed);
    compare_model(tally, m, synthetic_input(cfg, 2, seed + 1), o.threads,
                  "seed " + std::to_string(seed));
  }
  return tally.outcome();
}

template <class E>
bool throws(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome weights_round_trip() {
  Tally tally;
  const ModelConfig cfg = toy_config(32);
  const WeightContainer w = init_weights(cfg, 5);
  const std::vector<std::uint8_t> bytes = w.serialize();
  tally.expect(init_weights(cfg, 5).serialize() == bytes, "initialization is reproducible");
  tally.expect(init_weights(cfg, 6).serialize() != bytes, "seeds change the weights");
  const WeightContainer back = WeightContainer::parse(bytes);
  tally.expect(back.serialize() == bytes, "parse then serialize is identity");
  const Model m = Model::from_weights(cfg, back);
  tally.expect(m.to_weights().serialize() == bytes, "model round trip");
  const DenseTensor x = synthetic_input(cfg, 1, 2);
  tally.expect(bit_equal(m.forward(x).data, Model::from_weights(cfg, w).forward(x).data),
               "loaded model computes the same logits");

  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
  tally.expect(throws<TruncatedFileError>([&] { (void)WeightContainer::parse(cut); }),
               "truncated file");
  std::vector<std::uint8_t> bad = bytes;
  bad[0] ^= 0xff;
  tally.expect(throws<BadMagicError>([&] { (void)WeightContainer::parse(bad); }), "bad magic");
  ModelConfig other = cfg;
  other.classes = 11;
  tally.expect(throws<ConfigMismatchError>([&] { (void)Model::from_weights(other, w); }),
               "config mismatch");
  return tally.outcome();
}

Outcome measured_within_bound(const Options& o) {
  Tally tally;
  const ModelConfig cfg = toy_config(32);
  const Model m = Model::random(cfg, 3);
  const DenseTensor x = synthetic_input(cfg, 2, 4);
  for (bool saturate : {false, true}) {
    Profiler prof;
    ForwardContext ctx;
    ctx.threads = o.threads;
    ctx.profiler = &prof;
    ctx.saturate = saturate;
    (void)m.forward(x, ctx);
    for (const ModuleEntry& e : prof.report().modules) {
      const std::string label = e.stage + "." + std::to_string(e.block) + "." + e.kind;
      tally.expect(e.sops <= e.sop_upper_bound, label + " exceeds its bound");
      if (saturate && e.kind != "stem" && e.kind != "header") {
        tally.expect(e.sops == e.sop_upper_bound, label + " saturated run below its bound");
      }
      tally.expect(e.firing_rate >= 0.0 && e.firing_rate <= 1.0, label + " firing rate");
    }
  }
  tally.expect(throws<ArgumentError>([] { (void)parse_bound_kind("softmax"); }),
               "unknown bound kind");
  return tally.outcome();
}

Outcome oracle_self_checks() {
  Tally tally;
  // Level sets of the worked examples.
  const TemporalGrouping exp_if = TemporalGrouping::exp_if(3);
  tally.expect(oracle::level_enum(exp_if) == std::vector<double>({0, 1, 2, 4}), "Exp-IF levels");
  const TemporalGrouping pairs = TemporalGrouping::contiguous(4, 2);
  tally.expect(oracle::level_enum(pairs) ==
                   std::vector<double>({0, 1, 2, 4, 5, 6, 8, 9, 10}),
               "grouped levels");
  tally.expect(oracle::decompositions(5, pairs) == std::vector<std::uint32_t>({0b0101}),
               "unique decomposition");
  // Identity kernel reproduces the input.
  Rng rng(3);
  ConvParams id = ConvParams::make_full(2, 2, 3, 1, 1, false);
  for (std::size_t c = 0; c < 2; ++c) id.weights[((1 * 3 + 1) * 2 + c) * 2 + c] = 1.0;
  const DenseTensor x = random_tensor({1, 1, 4, 4, 2}, rng, -1, 1);
  tally.expect(bit_equal(oracle::conv_naive(x, id).data(), x.data()), "identity kernel");
  for (int i = 0; i < 1000; ++i) {
    const double total = rng.uniform(-1, 12);
    const std::vector<double> f = oracle::fire_neuron(total, pairs, 1.0, false);
    double sum = 0.0;
    for (double v : f) sum += v;
    const std::vector<double> lv = oracle::level_enum(pairs);
    const double want = lv[oracle::quantize_linear(total, lv, 1.0)];
    tally.expect(std::fabs(sum * 10.0 / 4.0 - want) < 1e-12,
                 "fire_neuron sums to its level");
  }
  return tally.outcome();
}

}  // namespace

// ---- acceptance criteria ----

Outcome energy_arithmetic() {
  Tally tally;
  struct Row {
    double sops;
    double rounded;    // expected value at two decimals
    double reference;  // must agree to 0.01
  };
  for (const Row& r : {Row{1.29e9, 1.16, 1.16}, Row{2.14e9, 1.93, 1.92}, Row{3.15e9, 2.84, 2.83}}) {
    const double e = energy_mj(r.sops, 0.0);
    tally.expect(std::fabs(e - r.rounded) <= 0.005 + 1e-9,
                 fmt(r.sops) + " SOPs gives " + fmt(e) + " mJ");
    tally.expect(std::fabs(e - r.reference) <= 0.01 + 1e-9,
                 fmt(e) + " mJ is not within 0.01 of " + fmt(r.reference));
    tally.note(fmt(r.sops) + "->" + fmt(e));
  }
  tally.expect(std::fabs(energy_mj(0.0, 1e9) - 4.6) < 1e-12, "MAC energy");
  return tally.outcome();
}

Outcome parameter_counts() {
  Tally tally;
  for (auto [name, target] : {std::pair{"small", 5.35e6}, {"base", 9.36e6}, {"large", 14.48e6}}) {
    const double n = static_cast<double>(count_params(preset(name)).total);
    tally.expect(std::fabs(n - target) <= 0.1 * target,
                 std::string(name) + " has " + fmt(n) + " parameters");
    tally.note(std::string(name) + " " + fmt(n / 1e6) + "M");
  }
  return tally.outcome();
}

Outcome lossless_conversion() {
  Tally tally;
  constexpr std::size_t kInputs = 100000;
  Rng rng(42);
  double worst = 0.0;
  for (const TemporalGrouping& g : contiguous_groupings(6, 2.0)) {
    const double lambda = rng.uniform(0.5, 2.0);
    const ExpLevelSet ls = build_level_set(g, lambda);
    const std::size_t T = g.time_steps;
    std::vector<double> i_avg(kInputs);
    DenseTensor current({T, 1, 1, 1, kInputs});
    for (std::size_t j = 0; j < kInputs; ++j) {
      i_avg[j] = rng.uniform(-0.25, 1.25) * lambda;
      for (std::size_t t = 0; t < T; ++t) current.at(t, 0, 0, 0, j) = i_avg[j];
    }
    const SpikeTensor spikes = fire(current, ls);
    std::size_t bad = 0;
    SpikeTrain train(T);
    for (std::size_t j = 0; j < kInputs; ++j) {
      for (std::size_t t = 0; t < T; ++t) train[t] = spikes.codes().at(t, 0, 0, 0, j);
      const double snn = decode_spikes(train, ls, lambda);
      const double ann = expg_forward(i_avg[j], T, 0.0, ls);
      const double rel = ann == snn ? 0.0 : std::fabs(ann - snn) / std::max(std::fabs(ann), std::fabs(snn));
      worst = std::max(worst, rel);
      if (rel > 1e-12) ++bad;
    }
    tally.expect(bad == 0, std::to_string(bad) + " mismatches for " + describe(g));
  }
  tally.note("max relative error " + fmt(worst));
  return tally.outcome();
}

Outcome spike_count_bound() {
  Tally tally;
  std::size_t levels = 0;
  for (std::size_t T = 1; T <= 6; ++T) {
    for (const TemporalGrouping& g : all_partitions(T, 2.0)) {
      for (bool symmetric : {false, true}) {
        ExpLevelSet ls = build_level_set(g, 1.0);
        if (symmetric) ls = symmetric_level_set(ls);
        const std::size_t n = g.group_count();
        for (std::size_t i = 0; i < ls.levels().size(); ++i) {
          ++levels;
          const SpikeTrain tr = encode_spikes(ls.levels()[i], ls);
          const auto fired = static_cast<std::size_t>(
              std::count_if(tr.begin(), tr.end(), [](double v) { return v != 0.0; }));
          tally.expect(fired <= n && static_cast<std::size_t>(std::popcount(ls.spike_mask(i))) == fired,
                       describe(g) + " level " + fmt(ls.levels()[i]) + " fires " +
                           std::to_string(fired));
          tally.expect(std::fabs(decode_spikes(tr, ls, 1.0) * ls.s_max() - ls.levels()[i]) <= 1e-12 * ls.s_max(),
                       "decode of " + fmt(ls.levels()[i]));
        }
      }
    }
  }
  tally.note(std::to_string(levels) + " levels");
  return tally.outcome();
}

Outcome quantizer_equivalence(bool inject_fault) {
  Tally tally;
  constexpr std::size_t kInputs = 100000;
  Rng rng(7);
  bool first = true;
  std::uint64_t max_ratio_num = 0;
  for (const TemporalGrouping& g : contiguous_groupings(6, 2.0)) {
    for (bool symmetric : {false, true}) {
      const double lambda = rng.uniform(0.5, 2.0);
      ExpLevelSet ls = build_level_set(g, lambda);
      std::vector<double> levels = oracle::level_enum(g);
      if (symmetric) {
        ls = symmetric_level_set(ls);
        levels = oracle::symmetric_levels(levels);
      }
      if (inject_fault && first) {
        testing::shift_boundary(ls, ls.boundaries().size() / 2, 0.3 * lambda);
      }
      first = false;
      const std::size_t limit = ceil_log2(levels.size());
      std::vector<double> xs;
      xs.reserve(kInputs + 2 * levels.size());
      for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        xs.push_back(lambda * (levels[i] + levels[i + 1]) / 2.0);
      }
      const double lo = lambda * levels.front() - 1.0;
      const double hi = lambda * levels.back() + 1.0;
      while (xs.size() < kInputs) xs.push_back(rng.uniform(lo, hi));
      std::size_t mismatches = 0;
      std::size_t over = 0;
      for (double x : xs) {
        std::uint64_t cmp = 0;
        const std::size_t got = ls.quantize(x, &cmp);
        const std::size_t want = oracle::quantize_linear(x, levels, lambda);
        if (got != want) ++mismatches;
        if (cmp > limit) ++over;
        max_ratio_num = std::max<std::uint64_t>(max_ratio_num, cmp);
      }
      const std::string label = describe(g) + (symmetric ? " symmetric" : "");
      tally.expect(mismatches == 0, label + ": " + std::to_string(mismatches) + " mismatches");
      tally.expect(over == 0, label + ": " + std::to_string(over) + " searches over " +
                                  std::to_string(limit) + " comparisons");
    }
  }
  tally.note("at most " + std::to_string(max_ratio_num) + " comparisons");
  return tally.outcome();
}

Outcome if_rate_identity() {
  Tally tally;
  Rng rng(1337);
  double worst = 0.0;
  for (int trial = 0; trial < 100000; ++trial) {
    const std::size_t T = 1 + rng.index(16);
    const double theta = rng.uniform(0.25, 4.0);
    NeuronParams p = NeuronParams::integrate_and_fire(theta);
    if (trial % 2 == 1) p.v0 = rng.uniform(0.0, theta);
    std::vector<double> in(T);
    for (double& v : in) v = rng.uniform(-0.5, 1.5) * theta;
    const RateSummary r = rate_summary(run_sequence(p, in), p, in);
    const double residual = std::fabs(r.f_avg - (r.i_avg - r.v_residual));
    worst = std::max({worst, residual, oracle::if_rate_residual(in, theta, p.v0)});
  }
  tally.expect(worst < 1e-9, "residual " + fmt(worst));
  tally.note("max residual " + fmt(worst));
  return tally.outcome();
}

Outcome grouping_equivalence(int threads) {
  Tally tally;
  std::size_t instances = 0;
  double worst = 0.0;
  for (std::uint64_t seed : oracle::kSeeds) {
    Rng rng(seed);
    for (std::size_t side : {4, 8}) {
      for (std::size_t n : {1, 2, 4}) {
        for (std::size_t T : {1, 2, 4}) {
          BlockConfig cfg;
          cfg.kind = BlockKind::ssa_b_gw;
          cfg.channels = 16;
          cfg.heads = 2;
          cfg.spatial_n = n;
          cfg.time_steps = T;
          cfg.temporal_group_size = std::min<std::size_t>(2, T);
          SsaBlockParams block = make_ssa_block(cfg);
          randomize(block, rng);
          const GwSsaParams& p = block.attention;
          const DenseTensor x = random_tensor({T, 2, side, side, 16}, rng, -1, 2);
          Profiler prof;
          prof.enter("t", 0, "gw_ssa");
          ForwardContext ctx;
          ctx.threads = threads;
          ctx.profiler = &prof;
          const DenseTensor got = gw_ssa(x, p, ctx);
          oracle::SopCounts counts;
          const DenseTensor want = oracle::gw_ssa_naive(x, p, &counts);
          const double err = scaled_error(got.data(), want.data());
          worst = std::max(worst, err);
          const std::string label = "side " + std::to_string(side) + " n " + std::to_string(n) +
                                    " T " + std::to_string(T) + " seed " + std::to_string(seed);
          tally.expect(err <= 1e-5, label + " differs by " + fmt(err));
          const ModuleEntry& e = prof.report().modules.at(0);
          tally.expect(e.score_sops == counts.score && e.value_sops == counts.value &&
                           e.sops == counts.sops,
                       label + " sop counts");
          for (GroupMode mode : {GroupMode::strided, GroupMode::window}) {
            tally.expect(bit_equal(regroup(make_groups(x, mode, n), mode, n, x.shape()).data(),
                                   x.data()),
                         label + " regroup");
          }
          ++instances;
        }
      }
    }
  }
  tally.note(std::to_string(instances) + " instances, max error " + fmt(worst));
  return tally.outcome();
}

Outcome multiplication_free(int threads) {
  Tally tally;
  Rng rng(64);
  Matrix s(64, 64);
  Matrix d(64, 64);
  for (double& v : s.data) {
    const double u = rng.uniform(0, 1);
    if (u < 0.6) continue;
    v = std::ldexp(u < 0.8 ? 1.0 : -1.0, static_cast<int>(rng.index(8)) - 2);
  }
  for (double& v : d.data) v = rng.uniform(-1, 1);
  std::uint64_t acc = 0;
  const Matrix got = spike_matmul(s, d, &acc);
  const Matrix want = oracle::matmul_naive(s, d);
  const double rel = max_abs_diff(got.data, want.data) / max_abs(want.data);
  tally.expect(rel <= 1e-6, "spike matmul relative error " + fmt(rel));
  const auto nonzero = static_cast<std::uint64_t>(
      std::count_if(s.data.begin(), s.data.end(), [](double v) { return v != 0.0; }));
  tally.expect(acc == nonzero * 64, "accumulation count");

  const ModuleEntry e = stage2_attention(4, 2, false, threads, 5);
  tally.expect(e.multiplies == 0, std::to_string(e.multiplies) + " general multiplies");
  tally.expect(e.macs == 0, std::to_string(e.macs) + " MACs in a spiking block");
  tally.expect(e.score_sops > 0 && e.value_sops > 0, "attention did not run on spikes");
  tally.note("matmul error " + fmt(rel) + ", block sops " + std::to_string(e.sops));
  return tally.outcome();
}

Outcome sop_scaling(int threads) {
  Tally tally;
  const ModuleEntry grouped = stage2_attention(4, 2, true, threads, 9);
  const ModuleEntry ungrouped = stage2_attention(1, 1, true, threads, 9);
  tally.expect(grouped.score_sops > 0, "no score SOPs measured");
  tally.expect(ungrouped.score_sops == 32 * grouped.score_sops,
               "ratio " + fmt(static_cast<double>(ungrouped.score_sops) /
                              static_cast<double>(grouped.score_sops)));
  BoundQuery q;
  q.input = {4, 1, 28, 28, 96};
  q.max_spikes = spikes_per_neuron(4, 2);
  q.spatial_groups = 16;
  tally.expect(grouped.score_sops == sop_upper_bound(BoundKind::attention_score, q),
               "grouped score SOPs differ from the bound");
  q.max_spikes = spikes_per_neuron(4, 1);
  q.spatial_groups = 1;
  tally.expect(ungrouped.score_sops == sop_upper_bound(BoundKind::attention_score, q),
               "ungrouped score SOPs differ from the bound");
  tally.note(std::to_string(ungrouped.score_sops) + " / " + std::to_string(grouped.score_sops));
  return tally.outcome();
}

Outcome determinism(int threads) {
  Tally tally;
  const ModelConfig cfg = preset("small");
  const Model m = Model::random(cfg, 42);
  const DenseTensor x = synthetic_input(cfg, 1, 7);
  const Forward a = run_forward(m, x, 1);
  const Forward b = run_forward(m, x, 1);
  const Forward c = run_forward(m, x, threads);
  tally.expect(bit_equal(a.logits.data, b.logits.data) && a.csv == b.csv, "repeat run differs");
  tally.expect(bit_equal(a.logits.data, c.logits.data),
               "logits differ with " + std::to_string(threads) + " threads");
  tally.expect(a.csv == c.csv, "profile differs with " + std::to_string(threads) + " threads");
  tally.expect(a.seconds < 60.0, "forward took " + fmt(a.seconds) + " s");
  tally.note("forward " + fmt(a.seconds) + " s, " + std::to_string(threads) + " threads " +
             fmt(c.seconds) + " s");
  return tally.outcome();
}

const std::vector<Check>& registry() {
  static const std::vector<Check> checks = {
      {"tensor_core", "regroup_round_trip", [](const Options&) { return regroup_round_trip(); }},
      {"tensor_core", "channel_ops", [](const Options&) { return channel_ops(); }},
      {"neuron", "traces", [](const Options&) { return neuron_traces(); }},
      {"neuron", "if_rate_identity", [](const Options&) { return if_rate_identity(); }},
      {"exp_coding", "level_sets", [](const Options&) { return level_sets(); }},
      {"exp_coding", "spike_count_bound", [](const Options&) { return spike_count_bound(); }},
      {"exp_coding", "quantizer_equivalence",
       [](const Options& o) { return quantizer_equivalence(o.inject_fault); }},
      {"exp_coding", "lossless_conversion", [](const Options&) { return lossless_conversion(); }},
      {"exp_coding", "fire_matches_oracle", [](const Options&) { return fire_matches_oracle(); }},
      {"attention", "ssa_forms", [](const Options&) { return ssa_forms(); }},
      {"attention", "grouping_equivalence",
       [](const Options& o) { return grouping_equivalence(o.threads); }},
      {"attention", "multiplication_free",
       [](const Options& o) { return multiplication_free(o.threads); }},
      {"blocks", "conv_matches_oracle", conv_matches_oracle},
      {"blocks", "blocks_match_oracle", blocks_match_oracle},
      {"model", "parameter_counts", [](const Options&) { return parameter_counts(); }},
      {"model", "weights_round_trip", [](const Options&) { return weights_round_trip(); }},
      {"model", "model_matches_oracle", model_matches_oracle},
      {"model", "determinism",
       [](const Options& o) { return determinism(std::max(o.threads, 8)); }},
      {"profiler", "energy_arithmetic", [](const Options&) { return energy_arithmetic(); }},
      {"profiler", "measured_within_bound", measured_within_bound},
      {"profiler", "sop_scaling", [](const Options& o) { return sop_scaling(o.threads); }},
      {"oracle", "self_checks", [](const Options&) { return oracle_self_checks(); }},
  };
  return checks;
}

std::vector<Result> run(std::string_view filter, const Options& options, std::ostream* log) {
  std::vector<Result> results;
  for (const Check& c : registry()) {
    const std::string full = c.group + "." + c.name;
    if (!filter.empty() && c.group != filter && !full.starts_with(filter)) continue;
    Result r;
    r.group = c.group;
    r.name = c.name;
    const auto start = Clock::now();
    try {
      Outcome o = c.run(options);
      r.pass = o.pass;
      r.detail = std::move(o.detail);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = seconds_since(start);
    if (log != nullptr) {
      *log << (r.pass ? "PASS " : "FAIL ") << full << " [" << fmt(r.seconds) << " s] " << r.detail
           << "\n";
      log->flush();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace spikevit::verify

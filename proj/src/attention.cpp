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

#include "spikevit/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikevit/parallel.hpp"

namespace spikevit {

namespace {

// Exponent e of a +-2^e spike value.
int shift_of(double v) {
  int e = 0;
  const double m = std::frexp(std::fabs(v), &e);
  if (m != 0.5) {
    throw UnsupportedAmplitudeError("spike value " + std::to_string(v) +
                                    " is not a signed power of two");
  }
  return e - 1;
}

void check_same_shape(const DenseTensor& a, const DenseTensor& b, const char* what) {
  if (!(a.shape() == b.shape())) throw ShapeError(std::string(what) + " shapes differ");
}

double activate(double x, const AttentionConfig& cfg) {
  if (!cfg.activation) return x;
  const ExpLevelSet& ls = *cfg.activation;
  return expg_forward(x, ls.time_steps(), 0.0, ls);
}

std::size_t head_dim_of(std::size_t channels, std::size_t heads) {
  if (heads == 0) throw ArgumentError("attention needs at least one head");
  if (channels % heads != 0) {
    throw ShapeError(std::to_string(channels) + " channels cannot be split into " +
                     std::to_string(heads) + " heads");
  }
  return channels / heads;
}

// Runs fn(b, head, channel offset, head_dim) for every batch item and head.
template <class Fn>
void for_heads(const TensorShape& s, const AttentionConfig& cfg, Fn&& fn) {
  const std::size_t dh = head_dim_of(s.c, cfg.heads);
  for (std::size_t b = 0; b < s.b; ++b)
    for (std::size_t h = 0; h < cfg.heads; ++h) fn(b, h * dh, dh);
}

}  // namespace

std::uint64_t spike_matmul_into(std::span<const double> s, std::size_t rows, std::size_t inner,
                                std::span<const double> d, std::size_t cols, std::span<double> out) {
  if (s.size() != rows * inner || d.size() != inner * cols || out.size() != rows * cols) {
    throw ShapeError("spike_matmul operand sizes do not agree");
  }
  std::uint64_t accumulations = 0;
  std::vector<double> tmp(cols);
  std::vector<int> shifts;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* srow = s.data() + r * inner;
    double* orow = out.data() + r * cols;
    std::fill(orow, orow + cols, 0.0);
    shifts.clear();
    for (std::size_t k = 0; k < inner; ++k) {
      if (srow[k] == 0.0) continue;
      const int e = shift_of(srow[k]);
      if (std::find(shifts.begin(), shifts.end(), e) == shifts.end()) shifts.push_back(e);
    }
    std::sort(shifts.begin(), shifts.end());
    for (int e : shifts) {
      std::fill(tmp.begin(), tmp.end(), 0.0);
      for (std::size_t k = 0; k < inner; ++k) {
        const double v = srow[k];
        if (v == 0.0 || (shifts.size() > 1 && shift_of(v) != e)) continue;
        const double* drow = d.data() + k * cols;
        if (v > 0.0) {
          for (std::size_t c = 0; c < cols; ++c) tmp[c] += drow[c];
        } else {
          for (std::size_t c = 0; c < cols; ++c) tmp[c] -= drow[c];
        }
        accumulations += cols;
      }
      for (std::size_t c = 0; c < cols; ++c) orow[c] += std::ldexp(tmp[c], e);
    }
  }
  return accumulations;
}

Matrix spike_matmul(const Matrix& s, const Matrix& d, std::uint64_t* accumulations) {
  if (s.cols != d.rows) {
    throw ShapeError("spike_matmul inner dimensions " + std::to_string(s.cols) + " and " +
                     std::to_string(d.rows) + " differ");
  }
  Matrix out(s.rows, d.cols);
  const std::uint64_t n = spike_matmul_into(s.data, s.rows, s.cols, d.data, d.cols, out.data);
  if (accumulations) *accumulations += n;
  return out;
}

double AttentionConfig::score_scale(std::size_t channels) const {
  if (scale) return *scale;
  return 1.0 / std::sqrt(static_cast<double>(head_dim_of(channels, heads)));
}

DenseTensor ssa_conversion(const DenseTensor& q, const DenseTensor& k, const DenseTensor& v,
                           const AttentionConfig& cfg) {
  check_same_shape(q, k, "query and key");
  check_same_shape(q, v, "query and value");
  const DenseTensor qa = temporal_average(q);
  const DenseTensor ka = temporal_average(k);
  const DenseTensor va = temporal_average(v);
  const TensorShape& s = qa.shape();
  const double scale = cfg.score_scale(s.c);
  const std::size_t N = s.tokens();
  DenseTensor out(s);
  for_heads(s, cfg, [&](std::size_t b, std::size_t c0, std::size_t dh) {
    const double* Q = qa.data().data() + b * N * s.c + c0;
    const double* K = ka.data().data() + b * N * s.c + c0;
    const double* V = va.data().data() + b * N * s.c + c0;
    double* O = out.data().data() + b * N * s.c + c0;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += Q[i * s.c + c] * K[j * s.c + c];
        const double a = activate(scale * dot, cfg);
        for (std::size_t c = 0; c < dh; ++c) O[i * s.c + c] += a * V[j * s.c + c];
      }
    }
  });
  return out;
}

DenseTensor ssa_conversion_expanded(const DenseTensor& q, const DenseTensor& k,
                                    const DenseTensor& v, const AttentionConfig& cfg) {
  check_same_shape(q, k, "query and key");
  check_same_shape(q, v, "query and value");
  const TensorShape& s = q.shape();
  const std::size_t T = s.t;
  if (cfg.activation && cfg.activation->time_steps() != T) {
    throw ShapeError("score activation expects " + std::to_string(cfg.activation->time_steps()) +
                     " time-steps, got " + std::to_string(T));
  }
  const DenseTensor ka = temporal_average(k);
  const DenseTensor va = temporal_average(v);
  const double scale = cfg.score_scale(s.c);
  const std::size_t N = s.tokens();
  const std::size_t slab = s.b * N * s.c;
  DenseTensor out(s);
  std::vector<double> score(T);
  for_heads(s, cfg, [&](std::size_t b, std::size_t c0, std::size_t dh) {
    const double* K = ka.data().data() + b * N * s.c + c0;
    const double* V = va.data().data() + b * N * s.c + c0;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t t = 0; t < T; ++t) {
          const double* Q = q.data().data() + t * slab + b * N * s.c + c0;
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += Q[i * s.c + c] * K[j * s.c + c];
          score[t] = scale * dot;
        }
        if (cfg.activation) {
          // One spiking neuron per (i, j) integrates the scores over time.
          const ExpLevelSet& ls = *cfg.activation;
          std::uint64_t unused = 0;
          const std::size_t level = select_level(score.data(), 1, T, 0.0, ls.boundaries(), unused);
          const std::uint32_t mask = ls.spike_mask(level);
          for (std::size_t t = 0; t < T; ++t) {
            score[t] = (mask & (std::uint32_t{1} << t))
                           ? ls.unit() * ls.level_sign(level) * ls.amplitudes()[t]
                           : 0.0;
          }
        }
        for (std::size_t t = 0; t < T; ++t) {
          if (score[t] == 0.0) continue;
          double* O = out.data().data() + t * slab + b * N * s.c + c0;
          for (std::size_t c = 0; c < dh; ++c) O[i * s.c + c] += score[t] * V[j * s.c + c];
        }
      }
    }
  });
  return out;
}

DenseTensor ssa_stbp(const DenseTensor& q, const DenseTensor& k, const DenseTensor& v,
                     const AttentionConfig& cfg) {
  check_same_shape(q, k, "query and key");
  check_same_shape(q, v, "query and value");
  const TensorShape& s = q.shape();
  const double scale = cfg.score_scale(s.c);
  const std::size_t N = s.tokens();
  DenseTensor out(s);
  for (std::size_t t = 0; t < s.t; ++t) {
    const std::size_t base = t * s.b * N * s.c;
    for_heads(s, cfg, [&](std::size_t b, std::size_t c0, std::size_t dh) {
      const std::size_t off = base + b * N * s.c + c0;
      const double* Q = q.data().data() + off;
      const double* K = k.data().data() + off;
      const double* V = v.data().data() + off;
      double* O = out.data().data() + off;
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += Q[i * s.c + c] * K[j * s.c + c];
          const double a = activate(scale * dot, cfg);
          for (std::size_t c = 0; c < dh; ++c) O[i * s.c + c] += a * V[j * s.c + c];
        }
      }
    });
  }
  return out;
}

AttentionOutput grouped_spike_attention(const SpikeTensor& q, const DenseTensor& k_sum,
                                        const DenseTensor& v_sum, const GroupingPlan& plan,
                                        std::size_t heads, const ExpLevelSet& score_levels,
                                        const ForwardContext& ctx) {
  const TensorShape& qs = q.shape();
  const std::size_t T = qs.t;
  TensorShape sum_shape = qs;
  sum_shape.t = 1;
  if (!(k_sum.shape() == sum_shape) || !(v_sum.shape() == sum_shape)) {
    throw ShapeError("key/value sums must have shape (1, B, H, W, C) matching the query");
  }
  if (heads == 0) throw ArgumentError("attention needs at least one head");
  if (score_levels.time_steps() != T) {
    throw ShapeError("score neurons expect " + std::to_string(score_levels.time_steps()) +
                     " time-steps, got " + std::to_string(T));
  }
  plan.validate(qs);

  const std::size_t n = plan.n;
  const std::size_t G = n * n;
  const std::size_t gh = qs.h / n;
  const std::size_t gw = qs.w / n;
  const std::size_t Ng = gh * gw;
  const std::size_t top = score_levels.levels().size() - 1;
  const auto amps = score_levels.amplitudes();
  OpCounters* counters = ctx.counters();

  DenseTensor raw(qs);
  struct Half {
    std::size_t lo, hi;
    GroupMode mode;
  };
  const Half halves[2] = {{0, plan.split_channel, plan.global_mode},
                          {plan.split_channel, qs.c, plan.local_mode}};
  FireStats fired;
  for (const Half& half : halves) {
    const std::size_t ch = half.hi - half.lo;
    if (ch == 0) continue;
    const std::size_t dh = head_dim_of(ch, heads);
    const double gain = q.unit() / std::sqrt(static_cast<double>(dh)) / static_cast<double>(T);
    const std::vector<double> thresholds = score_levels.pre_thresholds(gain);

    const auto qg = make_groups(channel_slice(q.codes(), half.lo, half.hi), half.mode, n);
    const auto kg = make_groups(channel_slice(k_sum, half.lo, half.hi), half.mode, n);
    const auto vg = make_groups(channel_slice(v_sum, half.lo, half.hi), half.mode, n);
    TensorShape group_shape{T, qs.b, gh, gw, ch};
    std::vector<DenseTensor> outg(G, DenseTensor(group_shape));
    std::vector<FireStats> task_fire(G * qs.b * heads);
    std::vector<std::uint64_t> task_score(task_fire.size()), task_value(task_fire.size());

    parallel_for(task_fire.size(), ctx.threads, [&](std::size_t task) {
      const std::size_t h = task % heads;
      const std::size_t b = (task / heads) % qs.b;
      const std::size_t g = task / (heads * qs.b);
      const std::size_t c0 = h * dh;
      std::vector<double> Qm(T * Ng * dh), KT(dh * Ng), Vm(Ng * dh);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < Ng; ++i)
          for (std::size_t c = 0; c < dh; ++c)
            Qm[(t * Ng + i) * dh + c] = qg[g].at(t, b, i / gw, i % gw, c0 + c);
      for (std::size_t j = 0; j < Ng; ++j) {
        for (std::size_t c = 0; c < dh; ++c) {
          KT[c * Ng + j] = kg[g].at(0, b, j / gw, j % gw, c0 + c);
          Vm[j * dh + c] = vg[g].at(0, b, j / gw, j % gw, c0 + c);
        }
      }
      std::vector<double> scores(T * Ng * Ng);
      task_score[task] = spike_matmul_into(Qm, T * Ng, dh, KT, Ng, scores);

      // Score neurons: one per (query, key) pair, integrating over time.
      std::vector<double> S(T * Ng * Ng, 0.0);
      FireStats local;
      for (std::size_t i = 0; i < Ng; ++i) {
        for (std::size_t j = 0; j < Ng; ++j) {
          const std::size_t level =
              ctx.saturate ? top
                           : select_level(scores.data() + i * Ng + j, Ng * Ng, T, 0.0, thresholds,
                                          local.comparisons);
          const std::uint32_t mask = score_levels.spike_mask(level);
          const double sign = score_levels.level_sign(level);
          for (std::size_t t = 0; t < T; ++t) {
            if (mask & (std::uint32_t{1} << t)) {
              S[(t * Ng + i) * Ng + j] = sign * amps[t];
              ++local.nonzero;
            }
          }
        }
      }
      local.slots = T * Ng * Ng;
      task_fire[task] = local;

      std::vector<double> out(T * Ng * dh);
      task_value[task] = spike_matmul_into(S, T * Ng, Ng, Vm, dh, out);
      DenseTensor& og = outg[g];
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < Ng; ++i)
          for (std::size_t c = 0; c < dh; ++c)
            og.at(t, b, i / gw, i % gw, c0 + c) = out[(t * Ng + i) * dh + c];
    });

    std::uint64_t score_sops = 0, value_sops = 0;
    for (std::size_t i = 0; i < task_fire.size(); ++i) {
      score_sops += task_score[i];
      value_sops += task_value[i];
      fired.comparisons += task_fire[i].comparisons;
      fired.nonzero += task_fire[i].nonzero;
      fired.slots += task_fire[i].slots;
    }
    if (counters) {
      counters->score_sops += score_sops;
      counters->value_sops += value_sops;
      counters->sops += score_sops + value_sops;
    }

    TensorShape half_shape = qs;
    half_shape.c = ch;
    const DenseTensor merged = regroup(outg, half.mode, n, half_shape);
    const std::size_t tokens = qs.t * qs.b * qs.h * qs.w;
    for (std::size_t p = 0; p < tokens; ++p)
      std::copy_n(merged.data().data() + p * ch, ch, raw.data().data() + p * qs.c + half.lo);
  }
  ctx.add_firing(fired);

  BoundQuery bq;
  bq.input = qs;
  bq.spatial_groups = G;
  bq.max_spikes = q.max_spikes();
  ctx.add_bound(sop_upper_bound(BoundKind::attention_score, bq));
  bq.max_spikes = score_levels.max_spikes();
  ctx.add_bound(sop_upper_bound(BoundKind::attention_value, bq));

  return {std::move(raw), score_levels.unit() / static_cast<double>(T)};
}

DenseTensor gw_ssa(const DenseTensor& input, const GwSsaParams& p, const ForwardContext& ctx) {
  const SpikeTensor x = fire_layer(input, p.sn_in, ctx);
  const SpikeTensor q = fire_layer(conv2d(x, p.q, ctx), p.sn_q, ctx);
  const DenseTensor k = conv2d(x, p.k, ctx);
  const DenseTensor v = conv2d(x, p.v, ctx);
  const AttentionOutput attn = grouped_spike_attention(q, temporal_sum(k), temporal_sum(v), p.plan,
                                                       p.heads, p.sn_score, ctx);
  DenseTensor mix = attn.raw;
  if (p.conv_path) {
    // Depthwise weights are folded by 1 / unit so both terms share the
    // attention's raw scale; the output neuron absorbs the unit.
    const SpikeTensor sv = fire_layer(v, p.sn_value, ctx);
    mix = add(mix, conv2d(sv, p.depthwise, ctx, 1.0 / attn.unit));
  }
  const SpikeTensor o = fire_layer(mix, p.sn_out, ctx, attn.unit);
  return add(conv2d(o, p.project, ctx), input);
}

}  // namespace spikevit

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

#include "spikevit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace spikevit::oracle {

std::size_t quantize_linear(double x, std::span<const double> levels, double lambda,
                            std::uint64_t* comparisons) {
  std::size_t index = 0;
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    ++count;
    const double boundary = lambda * (levels[i] + levels[i + 1]) / 2.0;
    if (x >= boundary) index = i + 1;
  }
  if (comparisons) *comparisons += count;
  return index;
}

namespace {

std::vector<double> bases_of(const TemporalGrouping& g) {
  std::vector<double> b(g.time_steps);
  for (std::size_t t = 0; t < g.time_steps; ++t) b[t] = std::pow(g.alpha, static_cast<double>(t));
  return b;
}

// Calls fn(mask) for every choice of at most one base per group.
template <class Fn>
void odometer(const TemporalGrouping& g, Fn&& fn) {
  std::vector<std::size_t> digit(g.groups.size(), 0);  // 0: none, k: groups[i][k-1]
  for (;;) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < digit.size(); ++i)
      if (digit[i]) mask |= std::uint32_t{1} << g.groups[i][digit[i] - 1];
    fn(mask);
    std::size_t i = 0;
    while (i < digit.size()) {
      if (++digit[i] <= g.groups[i].size()) break;
      digit[i] = 0;
      ++i;
    }
    if (i == digit.size()) return;
  }
}

double sum_mask(std::uint32_t mask, const std::vector<double>& bases) {
  double s = 0.0;
  for (std::size_t t = 0; t < bases.size(); ++t)
    if (mask >> t & 1u) s += bases[t];
  return s;
}

}  // namespace

std::vector<double> level_enum(const TemporalGrouping& g) {
  const auto bases = bases_of(g);
  std::set<double> values;
  odometer(g, [&](std::uint32_t mask) { values.insert(sum_mask(mask, bases)); });
  return {values.begin(), values.end()};
}

std::vector<double> symmetric_levels(std::span<const double> levels) {
  std::set<double> values;
  for (double v : levels) {
    values.insert(v);
    values.insert(-v);
  }
  values.erase(-0.0);
  values.insert(0.0);
  return {values.begin(), values.end()};
}

std::vector<std::uint32_t> decompositions(double level, const TemporalGrouping& g) {
  const auto bases = bases_of(g);
  std::vector<std::uint32_t> out;
  odometer(g, [&](std::uint32_t mask) {
    if (sum_mask(mask, bases) == level) out.push_back(mask);
  });
  return out;
}

std::vector<double> fire_neuron(double total, const TemporalGrouping& g, double lambda,
                                bool symmetric) {
  auto levels = level_enum(g);
  const double s_max = levels.back();
  if (symmetric) levels = symmetric_levels(levels);
  const double level = levels[quantize_linear(total, levels, lambda)];
  const double sign = level < 0 ? -1.0 : 1.0;
  auto masks = decompositions(std::fabs(level), g);
  // Prefer the pattern that uses the largest bases: compare masks from the
  // highest step down.
  std::uint32_t best = masks.front();
  for (std::uint32_t m : masks) {
    for (std::size_t t = g.time_steps; t-- > 0;) {
      const bool a = m >> t & 1u, b = best >> t & 1u;
      if (a != b) {
        if (a) best = m;
        break;
      }
    }
  }
  const double unit = static_cast<double>(g.time_steps) * lambda / s_max;
  std::vector<double> out(g.time_steps, 0.0);
  for (std::size_t t = 0; t < g.time_steps; ++t)
    if (best >> t & 1u) out[t] = sign * unit * std::pow(g.alpha, static_cast<double>(t));
  return out;
}

LevelSpec LevelSpec::of(const ExpLevelSet& ls) {
  return {ls.grouping(), ls.lambda(), ls.is_symmetric()};
}

DenseTensor spike_values(const DenseTensor& current, const LevelSpec& spec, std::uint64_t* nonzero) {
  const TensorShape& s = current.shape();
  if (s.t != spec.grouping.time_steps) throw ShapeError("oracle: time-step mismatch");
  DenseTensor out(s);
  for (std::size_t b = 0; b < s.b; ++b)
    for (std::size_t y = 0; y < s.h; ++y)
      for (std::size_t x = 0; x < s.w; ++x)
        for (std::size_t c = 0; c < s.c; ++c) {
          double total = 0.0;
          for (std::size_t t = 0; t < s.t; ++t) total += current.at(t, b, y, x, c);
          const auto train = fire_neuron(total, spec.grouping, spec.lambda, spec.symmetric);
          for (std::size_t t = 0; t < s.t; ++t) {
            out.at(t, b, y, x, c) = train[t];
            if (nonzero && train[t] != 0.0) ++*nonzero;
          }
        }
  return out;
}

DenseTensor conv_naive(const DenseTensor& x, const ConvParams& p, std::uint64_t* accumulations) {
  const TensorShape& s = x.shape();
  const std::size_t K = p.kernel;
  if (s.c != p.in_channels) throw ShapeError("oracle: channel mismatch");
  const std::size_t oh = (s.h + 2 * p.padding - K) / p.stride + 1;
  const std::size_t ow = (s.w + 2 * p.padding - K) / p.stride + 1;
  DenseTensor out(TensorShape{s.t, s.b, oh, ow, p.out_channels});
  const bool dw = p.kind == ConvKind::depthwise;
  for (std::size_t t = 0; t < s.t; ++t)
    for (std::size_t b = 0; b < s.b; ++b)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
          for (std::size_t co = 0; co < p.out_channels; ++co) {
            double acc = p.bias.empty() ? 0.0 : p.bias[co];
            for (std::size_t ky = 0; ky < K; ++ky)
              for (std::size_t kx = 0; kx < K; ++kx)
                for (std::size_t ci = 0; ci < p.in_channels; ++ci) {
                  if (dw && ci != co) continue;
                  const long long iy = static_cast<long long>(oy * p.stride + ky) -
                                       static_cast<long long>(p.padding);
                  const long long ix = static_cast<long long>(ox * p.stride + kx) -
                                       static_cast<long long>(p.padding);
                  if (iy < 0 || ix < 0 || iy >= static_cast<long long>(s.h) ||
                      ix >= static_cast<long long>(s.w)) {
                    continue;
                  }
                  const double v = x.at(t, b, static_cast<std::size_t>(iy),
                                        static_cast<std::size_t>(ix), ci);
                  double w = 0.0;
                  if (p.kind == ConvKind::pointwise) w = p.weights[ci * p.out_channels + co];
                  else if (dw) w = p.weights[(ky * K + kx) * p.in_channels + ci];
                  else w = p.weights[((ky * K + kx) * p.in_channels + ci) * p.out_channels + co];
                  acc += v * w;
                  if (accumulations && v != 0.0) ++*accumulations;
                }
            out.at(t, b, oy, ox, co) = acc;
          }
  return out;
}

Matrix matmul_naive(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("oracle: inner dimension mismatch");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

DenseTensor attention_naive(const DenseTensor& q, const DenseTensor& k_avg,
                            const DenseTensor& v_avg, std::size_t heads, const LevelSpec& score,
                            AttentionCounts* counts) {
  const TensorShape& s = q.shape();
  if (heads == 0 || s.c % heads) throw ShapeError("oracle: heads do not divide channels");
  const std::size_t dh = s.c / heads;
  const std::size_t N = s.h * s.w;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  DenseTensor out(s);
  auto tok = [&](std::size_t i) { return std::pair{i / s.w, i % s.w}; };
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto [iy, ix] = tok(i);
      for (std::size_t j = 0; j < N; ++j) {
        const auto [jy, jx] = tok(j);
        double total = 0.0;
        for (std::size_t t = 0; t < s.t; ++t) {
          double dot = 0.0;
          for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
            const double qv = q.at(t, 0, iy, ix, c);
            dot += qv * k_avg.at(0, 0, jy, jx, c);
            if (counts && qv != 0.0) ++counts->score;
          }
          total += scale * dot;
        }
        const auto train = fire_neuron(total, score.grouping, score.lambda, score.symmetric);
        for (std::size_t t = 0; t < s.t; ++t) {
          if (train[t] == 0.0) continue;
          for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
            out.at(t, 0, iy, ix, c) += train[t] * v_avg.at(0, 0, jy, jx, c);
            if (counts) ++counts->value;
          }
        }
      }
    }
  }
  return out;
}

namespace {

double rate_f(double x, const ExpLevelSet* f) {
  if (!f) return x;
  const auto levels = level_enum(f->grouping());
  const double T = static_cast<double>(f->time_steps());
  const std::size_t i = quantize_linear(x * T, levels, f->lambda());
  return f->lambda() * levels[i] / levels.back();
}

DenseTensor attention_rate(const DenseTensor& q, const DenseTensor& k, const DenseTensor& v,
                           std::size_t heads, const ExpLevelSet* f) {
  const TensorShape& s = q.shape();
  if (!(k.shape() == s) || !(v.shape() == s)) throw ShapeError("oracle: shape mismatch");
  if (heads == 0 || s.c % heads) throw ShapeError("oracle: heads do not divide channels");
  const std::size_t dh = s.c / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t N = s.h * s.w;
  DenseTensor out(s);
  for (std::size_t t = 0; t < s.t; ++t)
    for (std::size_t b = 0; b < s.b; ++b)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t j = 0; j < N; ++j) {
            double dot = 0.0;
            for (std::size_t c = h * dh; c < (h + 1) * dh; ++c)
              dot += q.at(t, b, i / s.w, i % s.w, c) * k.at(t, b, j / s.w, j % s.w, c);
            const double a = rate_f(scale * dot, f);
            for (std::size_t c = h * dh; c < (h + 1) * dh; ++c)
              out.at(t, b, i / s.w, i % s.w, c) += a * v.at(t, b, j / s.w, j % s.w, c);
          }
  return out;
}

DenseTensor mean_over_time(const DenseTensor& x) {
  const TensorShape& s = x.shape();
  TensorShape o = s;
  o.t = 1;
  DenseTensor out(o);
  for (std::size_t t = 0; t < s.t; ++t)
    for (std::size_t b = 0; b < s.b; ++b)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t xx = 0; xx < s.w; ++xx)
          for (std::size_t c = 0; c < s.c; ++c) out.at(0, b, y, xx, c) += x.at(t, b, y, xx, c);
  for (double& v : out.data()) v /= static_cast<double>(s.t);
  return out;
}

DenseTensor plus(const DenseTensor& a, const DenseTensor& b) {
  if (!(a.shape() == b.shape())) throw ShapeError("oracle: residual shape mismatch");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

DenseTensor slice_batch(const DenseTensor& x, std::size_t b) {
  const TensorShape& s = x.shape();
  DenseTensor out(TensorShape{s.t, 1, s.h, s.w, s.c});
  for (std::size_t t = 0; t < s.t; ++t)
    for (std::size_t y = 0; y < s.h; ++y)
      for (std::size_t xx = 0; xx < s.w; ++xx)
        for (std::size_t c = 0; c < s.c; ++c) out.at(t, 0, y, xx, c) = x.at(t, b, y, xx, c);
  return out;
}

}  // namespace

DenseTensor ssa_rate_naive(const DenseTensor& q_avg, const DenseTensor& k_avg,
                           const DenseTensor& v_avg, std::size_t heads, const ExpLevelSet* f) {
  return attention_rate(mean_over_time(q_avg), mean_over_time(k_avg), mean_over_time(v_avg), heads, f);
}

DenseTensor ssa_stbp_naive(const DenseTensor& q, const DenseTensor& k, const DenseTensor& v,
                           std::size_t heads, const ExpLevelSet* f) {
  return attention_rate(q, k, v, heads, f);
}

DenseTensor gw_ssa_naive(const DenseTensor& input, const GwSsaParams& p, SopCounts* counts) {
  std::uint64_t acc = 0;
  const DenseTensor x = spike_values(input, LevelSpec::of(p.sn_in));
  const DenseTensor q = spike_values(conv_naive(x, p.q, &acc), LevelSpec::of(p.sn_q));
  const DenseTensor kc = conv_naive(x, p.k, &acc);
  const DenseTensor vc = conv_naive(x, p.v, &acc);
  const DenseTensor k_avg = mean_over_time(kc);
  const DenseTensor v_avg = mean_over_time(vc);
  const TensorShape& s = q.shape();
  const std::size_t n = p.plan.n;
  DenseTensor attn(s);
  AttentionCounts ac;
  struct Half {
    std::size_t lo, hi;
    GroupMode mode;
  };
  for (const Half half : {Half{0, p.plan.split_channel, p.plan.global_mode},
                          Half{p.plan.split_channel, s.c, p.plan.local_mode}}) {
    if (half.hi == half.lo) continue;
    const auto qg = make_groups(channel_slice(q, half.lo, half.hi), half.mode, n);
    const auto kg = make_groups(channel_slice(k_avg, half.lo, half.hi), half.mode, n);
    const auto vg = make_groups(channel_slice(v_avg, half.lo, half.hi), half.mode, n);
    std::vector<DenseTensor> outs;
    for (std::size_t g = 0; g < qg.size(); ++g) {
      const TensorShape gs = qg[g].shape();
      DenseTensor og(gs);
      for (std::size_t b = 0; b < s.b; ++b) {
        const DenseTensor r = attention_naive(slice_batch(qg[g], b), slice_batch(kg[g], b),
                                              slice_batch(vg[g], b), p.heads,
                                              LevelSpec::of(p.sn_score), &ac);
        for (std::size_t t = 0; t < gs.t; ++t)
          for (std::size_t y = 0; y < gs.h; ++y)
            for (std::size_t xx = 0; xx < gs.w; ++xx)
              for (std::size_t c = 0; c < gs.c; ++c) og.at(t, b, y, xx, c) = r.at(t, 0, y, xx, c);
      }
      outs.push_back(std::move(og));
    }
    TensorShape hs = s;
    hs.c = half.hi - half.lo;
    const DenseTensor merged = regroup(outs, half.mode, n, hs);
    for (std::size_t t = 0; t < s.t; ++t)
      for (std::size_t b = 0; b < s.b; ++b)
        for (std::size_t y = 0; y < s.h; ++y)
          for (std::size_t xx = 0; xx < s.w; ++xx)
            for (std::size_t c = 0; c < hs.c; ++c)
              attn.at(t, b, y, xx, half.lo + c) = merged.at(t, b, y, xx, c);
  }
  DenseTensor mix = attn;
  if (p.conv_path) {
    const DenseTensor sv = spike_values(vc, LevelSpec::of(p.sn_value));
    mix = plus(mix, conv_naive(sv, p.depthwise, &acc));
  }
  const DenseTensor o = spike_values(mix, LevelSpec::of(p.sn_out));
  const DenseTensor out = plus(conv_naive(o, p.project, &acc), input);
  if (counts) {
    counts->score += ac.score;
    counts->value += ac.value;
    counts->sops += acc + ac.score + ac.value;
  }
  return out;
}

DenseTensor conv_sffn_naive(const DenseTensor& x, const ConvFfnParams& p, SopCounts* counts) {
  std::uint64_t acc = 0;
  const DenseTensor s = spike_values(x, LevelSpec::of(p.sn_in));
  const DenseTensor z = spike_values(conv_naive(s, p.expand, &acc), LevelSpec::of(p.sn_sym));
  const DenseTensor u = spike_values(conv_naive(z, p.depthwise, &acc), LevelSpec::of(p.sn_hidden));
  const DenseTensor out = plus(conv_naive(u, p.project, &acc), x);
  if (counts) counts->sops += acc;
  return out;
}

DenseTensor sffn_naive(const DenseTensor& x, const FfnParams& p, SopCounts* counts) {
  std::uint64_t acc = 0;
  const DenseTensor s = spike_values(x, LevelSpec::of(p.sn_in));
  const DenseTensor u = spike_values(conv_naive(s, p.expand, &acc), LevelSpec::of(p.sn_hidden));
  const DenseTensor out = plus(conv_naive(u, p.project, &acc), x);
  if (counts) counts->sops += acc;
  return out;
}

DenseTensor conv_b_naive(const DenseTensor& x, const ConvBlockParams& p, SopCounts* counts) {
  std::uint64_t acc = 0;
  const DenseTensor a = spike_values(x, LevelSpec::of(p.sn_in));
  const DenseTensor b = spike_values(conv_naive(a, p.conv1, &acc), LevelSpec::of(p.sn_mid));
  const DenseTensor y = plus(conv_naive(b, p.conv2, &acc), x);
  if (counts) counts->sops += acc;
  return conv_sffn_naive(y, p.ffn, counts);
}

DenseTensor ssa_b_naive(const DenseTensor& x, const SsaBlockParams& p, SopCounts* counts) {
  const DenseTensor y = gw_ssa_naive(x, p.attention, counts);
  return p.kind == BlockKind::ssa_b_gw ? conv_sffn_naive(y, p.conv_ffn, counts)
                                       : sffn_naive(y, p.ffn, counts);
}

Matrix header_naive(const DenseTensor& x, const LinearParams& p) {
  const TensorShape& s = x.shape();
  Matrix out(s.b, p.out_features);
  for (std::size_t b = 0; b < s.b; ++b) {
    for (std::size_t o = 0; o < p.out_features; ++o) {
      double acc = p.bias[o];
      for (std::size_t c = 0; c < s.c; ++c) {
        double pooled = 0.0;
        for (std::size_t t = 0; t < s.t; ++t)
          for (std::size_t y = 0; y < s.h; ++y)
            for (std::size_t xx = 0; xx < s.w; ++xx) pooled += x.at(t, b, y, xx, c);
        pooled /= static_cast<double>(s.t * s.h * s.w);
        acc += pooled * p.weights[c * p.out_features + o];
      }
      out(b, o) = acc;
    }
  }
  return out;
}

Matrix model_naive(const Model& m, const DenseTensor& input, SopCounts* counts) {
  const DenseTensor stem = conv_naive(input, m.stem);
  const TensorShape ss = stem.shape();
  DenseTensor x(TensorShape{m.config().time_steps, ss.b, ss.h, ss.w, ss.c});
  for (std::size_t t = 0; t < x.shape().t; ++t)
    for (std::size_t i = 0; i < stem.data().size(); ++i)
      x.data()[t * stem.data().size() + i] = stem.data()[i];
  for (const auto& st : m.stages) {
    if (st.down) {
      std::uint64_t acc = 0;
      x = conv_naive(spike_values(x, LevelSpec::of(st.down->sn)), st.down->conv, &acc);
      if (counts) counts->sops += acc;
    }
    for (const auto& blk : st.blocks) {
      if (const auto* cb = std::get_if<ConvBlockParams>(&blk)) x = conv_b_naive(x, *cb, counts);
      else x = ssa_b_naive(x, std::get<SsaBlockParams>(blk), counts);
    }
  }
  return header_naive(x, m.head);
}

double if_rate_residual(std::span<const double> inputs, double theta, double v0) {
  double v = v0;
  double fired = 0.0;
  double charge = 0.0;
  for (double x : inputs) {
    v += x;
    charge += x;
    if (v >= theta) {
      v -= theta;
      fired += theta;
    }
  }
  const double T = static_cast<double>(inputs.size());
  return std::fabs(fired / T - (charge / T - (v - v0) / T));
}

}  // namespace spikevit::oracle

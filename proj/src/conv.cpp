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

#include "spikevit/conv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikevit/parallel.hpp"

namespace spikevit {

ConvParams ConvParams::make_pointwise(std::size_t c_in, std::size_t c_out, bool with_bias) {
  ConvParams p;
  p.kind = ConvKind::pointwise;
  p.in_channels = c_in;
  p.out_channels = c_out;
  p.weights.assign(c_in * c_out, 0.0);
  if (with_bias) p.bias.assign(c_out, 0.0);
  return p;
}

ConvParams ConvParams::make_depthwise(std::size_t channels, std::size_t kernel) {
  ConvParams p;
  p.kind = ConvKind::depthwise;
  p.kernel = kernel;
  p.padding = kernel / 2;
  p.in_channels = channels;
  p.out_channels = channels;
  p.weights.assign(kernel * kernel * channels, 0.0);
  return p;
}

ConvParams ConvParams::make_full(std::size_t c_in, std::size_t c_out, std::size_t kernel,
                                 std::size_t stride, std::size_t padding, bool with_bias) {
  ConvParams p;
  p.kind = ConvKind::full;
  p.kernel = kernel;
  p.stride = stride;
  p.padding = padding;
  p.in_channels = c_in;
  p.out_channels = c_out;
  p.weights.assign(kernel * kernel * c_in * c_out, 0.0);
  if (with_bias) p.bias.assign(c_out, 0.0);
  return p;
}

std::vector<std::size_t> ConvParams::weight_dims() const {
  switch (kind) {
    case ConvKind::pointwise:
      return {in_channels, out_channels};
    case ConvKind::depthwise:
      return {kernel, kernel, in_channels};
    case ConvKind::full:
      return {kernel, kernel, in_channels, out_channels};
  }
  return {};
}

std::size_t ConvParams::weight_count() const {
  std::size_t n = 1;
  for (std::size_t d : weight_dims()) n *= d;
  return n;
}

std::size_t ConvParams::fan_in() const {
  switch (kind) {
    case ConvKind::pointwise:
      return in_channels;
    case ConvKind::depthwise:
      return kernel * kernel;
    case ConvKind::full:
      return kernel * kernel * in_channels;
  }
  return 1;
}

void ConvParams::validate() const {
  if (kernel == 0 || stride == 0) throw ArgumentError("kernel and stride must be positive");
  if (kind == ConvKind::pointwise && (kernel != 1 || stride != 1 || padding != 0)) {
    throw ArgumentError("pointwise convolution must have kernel 1, stride 1, padding 0");
  }
  if (kind == ConvKind::depthwise && in_channels != out_channels) {
    throw ArgumentError("depthwise convolution needs equal input and output channels");
  }
  if (weights.size() != weight_count()) {
    throw ShapeError("convolution has " + std::to_string(weights.size()) + " weights, expected " +
                     std::to_string(weight_count()));
  }
  if (!bias.empty() && bias.size() != out_channels) {
    throw ShapeError("bias length " + std::to_string(bias.size()) + " does not match " +
                     std::to_string(out_channels) + " output channels");
  }
}

TensorShape ConvParams::output_shape(const TensorShape& in) const {
  if (in.c != in_channels) {
    throw ShapeError("convolution expects " + std::to_string(in_channels) + " channels, got " +
                     std::to_string(in.c));
  }
  if (in.h + 2 * padding < kernel || in.w + 2 * padding < kernel) {
    throw ShapeError("convolution kernel is larger than the padded input");
  }
  TensorShape out = in;
  out.h = (in.h + 2 * padding - kernel) / stride + 1;
  out.w = (in.w + 2 * padding - kernel) / stride + 1;
  out.c = out_channels;
  return out;
}

namespace {

// Input coordinate of kernel tap j for output o, or -1 when it is padding.
inline long long tap(std::size_t o, std::size_t j, std::size_t stride, std::size_t pad,
                     std::size_t extent) {
  const long long i = static_cast<long long>(o * stride + j) - static_cast<long long>(pad);
  return (i >= 0 && i < static_cast<long long>(extent)) ? i : -1;
}

// Spike positions of one (t, b) slab, bucketed by amplitude exponent.
struct SlabIndex {
  std::vector<int> exponents;            // ascending
  std::vector<std::uint32_t> offsets;    // (bucket * positions + pos) -> first entry, plus end
  std::vector<std::uint32_t> channels;
  std::vector<std::int8_t> signs;
};

int amplitude_exponent(double v) {
  int e = 0;
  const double m = std::frexp(std::fabs(v), &e);
  if (m != 0.5) {
    throw UnsupportedAmplitudeError("spike amplitude " + std::to_string(v) +
                                    " is not a power of two");
  }
  return e - 1;
}

SlabIndex index_slab(const double* slab, std::size_t positions, std::size_t channels) {
  SlabIndex idx;
  const std::size_t n = positions * channels;
  std::vector<int> exps;
  for (std::size_t i = 0; i < n; ++i) {
    if (slab[i] == 0.0) continue;
    const int e = amplitude_exponent(slab[i]);
    if (std::find(exps.begin(), exps.end(), e) == exps.end()) exps.push_back(e);
  }
  std::sort(exps.begin(), exps.end());
  idx.exponents = exps;
  const std::size_t nb = exps.size();
  idx.offsets.assign(nb * positions + 1, 0);
  // Counting pass, then fill.
  std::vector<std::uint32_t> count(nb * positions, 0);
  auto bucket_of = [&](double v) {
    const int e = amplitude_exponent(v);
    return static_cast<std::size_t>(std::lower_bound(exps.begin(), exps.end(), e) - exps.begin());
  };
  std::vector<std::uint8_t> bucket(n, 0);
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = slab[pos * channels + c];
      if (v == 0.0) continue;
      const std::size_t k = nb == 1 ? 0 : bucket_of(v);
      bucket[pos * channels + c] = static_cast<std::uint8_t>(k);
      ++count[k * positions + pos];
    }
  }
  std::uint32_t run = 0;
  for (std::size_t i = 0; i < count.size(); ++i) {
    idx.offsets[i] = run;
    run += count[i];
  }
  idx.offsets.back() = run;
  idx.channels.resize(run);
  idx.signs.resize(run);
  std::vector<std::uint32_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = slab[pos * channels + c];
      if (v == 0.0) continue;
      const std::uint32_t at = cursor[bucket[pos * channels + c] * positions + pos]++;
      idx.channels[at] = static_cast<std::uint32_t>(c);
      idx.signs[at] = v > 0.0 ? 1 : -1;
    }
  }
  return idx;
}

std::uint64_t spike_bound(const SpikeTensor& x, const ConvParams& p) {
  BoundQuery q;
  q.input = x.shape();
  q.max_spikes = x.max_spikes();
  q.out_channels = p.out_channels;
  q.kernel = p.kernel;
  q.stride = p.stride;
  q.padding = p.padding;
  switch (p.kind) {
    case ConvKind::pointwise:
      return sop_upper_bound(BoundKind::pointwise, q);
    case ConvKind::depthwise:
      return sop_upper_bound(BoundKind::depthwise, q);
    case ConvKind::full:
      return sop_upper_bound(BoundKind::conv, q);
  }
  return 0;
}

}  // namespace

DenseTensor conv2d(const DenseTensor& x, const ConvParams& p, const ForwardContext& ctx) {
  p.validate();
  const TensorShape& is = x.shape();
  const TensorShape os = p.output_shape(is);
  DenseTensor out(os);
  const std::size_t K = p.kernel;
  const std::size_t cin = p.in_channels;
  const std::size_t cout = p.out_channels;
  const bool dw = p.kind == ConvKind::depthwise;
  const double* in = x.data().data();
  const double* w = p.weights.data();
  double* o = out.data().data();
  OpCounters* counters = ctx.counters();

  parallel_for(os.t * os.b * os.h, ctx.threads, [&](std::size_t task) {
    const std::size_t oy = task % os.h;
    const std::size_t tb = task / os.h;
    std::uint64_t macs = 0;
    double* row = o + task * os.w * cout;
    for (std::size_t ox = 0; ox < os.w; ++ox) {
      double* acc = row + ox * cout;
      for (std::size_t ky = 0; ky < K; ++ky) {
        const long long iy = tap(oy, ky, p.stride, p.padding, is.h);
        if (iy < 0) continue;
        for (std::size_t kx = 0; kx < K; ++kx) {
          const long long ix = tap(ox, kx, p.stride, p.padding, is.w);
          if (ix < 0) continue;
          const double* px = in + ((tb * is.h + static_cast<std::size_t>(iy)) * is.w +
                                   static_cast<std::size_t>(ix)) * cin;
          if (dw) {
            const double* wk = w + (ky * K + kx) * cin;
            for (std::size_t c = 0; c < cin; ++c) acc[c] += px[c] * wk[c];
            macs += cin;
          } else {
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double v = px[ci];
              const double* wr = w + ((ky * K + kx) * cin + ci) * cout;
              for (std::size_t co = 0; co < cout; ++co) acc[co] += v * wr[co];
            }
            macs += cin * cout;
          }
        }
      }
      if (!p.bias.empty())
        for (std::size_t co = 0; co < cout; ++co) acc[co] += p.bias[co];
    }
    add_ops(counters, 0, macs, macs);
  });
  return out;
}

DenseTensor conv2d(const SpikeTensor& x, const ConvParams& p, const ForwardContext& ctx,
                   double weight_gain) {
  p.validate();
  if (!std::isfinite(weight_gain)) throw NumericError("weight gain must be finite");
  const TensorShape& is = x.shape();
  const TensorShape os = p.output_shape(is);
  const std::size_t K = p.kernel;
  const std::size_t cin = p.in_channels;
  const std::size_t cout = p.out_channels;
  const bool dw = p.kind == ConvKind::depthwise;
  const std::size_t positions = is.h * is.w;
  const std::size_t slabs = is.t * is.b;

  // Parameter transform, once per call.
  const double scale = x.unit() * weight_gain;
  std::vector<double> w(p.weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = p.weights[i] * scale;
  std::vector<double> bias(p.bias.size());
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = p.bias[i] * weight_gain;

  std::vector<SlabIndex> index(slabs);
  const double* in = x.codes().data().data();
  parallel_for(slabs, ctx.threads, [&](std::size_t s) {
    index[s] = index_slab(in + s * positions * cin, positions, cin);
  });

  DenseTensor out(os);
  double* o = out.data().data();
  OpCounters* counters = ctx.counters();
  const std::size_t row_len = os.w * cout;

  parallel_for(slabs * os.h, ctx.threads, [&](std::size_t task) {
    const std::size_t oy = task % os.h;
    const SlabIndex& idx = index[task / os.h];
    double* row = o + task * row_len;
    std::vector<double> acc(row_len);
    std::uint64_t sops = 0;
    for (std::size_t k = 0; k < idx.exponents.size(); ++k) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const std::uint32_t* off = idx.offsets.data() + k * positions;
      for (std::size_t ox = 0; ox < os.w; ++ox) {
        double* a = acc.data() + ox * cout;
        for (std::size_t ky = 0; ky < K; ++ky) {
          const long long iy = tap(oy, ky, p.stride, p.padding, is.h);
          if (iy < 0) continue;
          for (std::size_t kx = 0; kx < K; ++kx) {
            const long long ix = tap(ox, kx, p.stride, p.padding, is.w);
            if (ix < 0) continue;
            const std::size_t pos = static_cast<std::size_t>(iy) * is.w + static_cast<std::size_t>(ix);
            const std::uint32_t begin = off[pos];
            const std::uint32_t end = off[pos + 1];
            if (dw) {
              const double* wk = w.data() + (ky * K + kx) * cin;
              for (std::uint32_t e = begin; e < end; ++e) {
                const std::uint32_t c = idx.channels[e];
                if (idx.signs[e] > 0) a[c] += wk[c]; else a[c] -= wk[c];
              }
              sops += end - begin;
            } else {
              for (std::uint32_t e = begin; e < end; ++e) {
                const double* wr = w.data() + ((ky * K + kx) * cin + idx.channels[e]) * cout;
                if (idx.signs[e] > 0) {
                  for (std::size_t co = 0; co < cout; ++co) a[co] += wr[co];
                } else {
                  for (std::size_t co = 0; co < cout; ++co) a[co] -= wr[co];
                }
              }
              sops += static_cast<std::uint64_t>(end - begin) * cout;
            }
          }
        }
      }
      const int e = idx.exponents[k];
      for (std::size_t i = 0; i < row_len; ++i) row[i] += std::ldexp(acc[i], e);
    }
    if (!bias.empty())
      for (std::size_t ox = 0; ox < os.w; ++ox)
        for (std::size_t co = 0; co < cout; ++co) row[ox * cout + co] += bias[co];
    add_ops(counters, sops);
  });
  ctx.add_bound(spike_bound(x, p));
  return out;
}

}  // namespace spikevit

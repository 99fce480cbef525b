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

#include "spikevit/tensor.hpp"

#include <cmath>
#include <string>

namespace spikevit {

namespace {

std::string describe(const TensorShape& s) {
  return "(" + std::to_string(s.t) + "," + std::to_string(s.b) + "," + std::to_string(s.h) +
         "," + std::to_string(s.w) + "," + std::to_string(s.c) + ")";
}

void check_divisible(const TensorShape& s, std::size_t n) {
  if (n == 0 || s.h % n != 0 || s.w % n != 0) {
    throw ShapeError("spatial extent " + describe(s) + " is not divisible into " +
                     std::to_string(n) + "x" + std::to_string(n) + " groups");
  }
}

}  // namespace

void validate_shape(const TensorShape& shape) {
  if (shape.t == 0 || shape.b == 0 || shape.h == 0 || shape.w == 0) {
    throw ShapeError("tensor extents must be positive, got " + describe(shape));
  }
}

DenseTensor::DenseTensor(const TensorShape& shape, double fill)
    : shape_(shape), data_(shape.size(), fill) {
  validate_shape(shape_);
}

DenseTensor::DenseTensor(const TensorShape& shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     describe(shape_));
  }
}

SpikeTensor::SpikeTensor(DenseTensor codes, double unit, double alpha, bool is_signed,
                         std::size_t max_spikes)
    : codes_(std::move(codes)),
      unit_(unit),
      alpha_(alpha),
      signed_(is_signed),
      max_spikes_(max_spikes) {}

SpikeTensor SpikeTensor::with_codes(DenseTensor codes) const {
  return SpikeTensor(std::move(codes), unit_, alpha_, signed_, max_spikes_);
}

DenseTensor SpikeTensor::values() const {
  DenseTensor out(codes_.shape());
  auto src = codes_.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = unit_ * src[i];
  return out;
}

void SpikeTensor::check_amplitudes() const {
  const auto& s = codes_.shape();
  const std::size_t slab = s.b * s.h * s.w * s.c;
  auto d = codes_.data();
  double amp = 1.0;
  for (std::size_t t = 0; t < s.t; ++t, amp *= alpha_) {
    for (std::size_t i = t * slab; i < (t + 1) * slab; ++i) {
      const double v = d[i];
      if (v == 0.0 || v == amp || (signed_ && v == -amp)) continue;
      throw UnsupportedAmplitudeError("spike value " + std::to_string(v) + " at step " +
                                      std::to_string(t) + " is not in {0, " +
                                      (signed_ ? "+-" : "") + std::to_string(amp) + "}");
    }
  }
}

std::size_t SpikeTensor::count_nonzero() const {
  std::size_t n = 0;
  for (double v : codes_.data()) n += v != 0.0;
  return n;
}

GroupingPlan GroupingPlan::from_ratio(std::size_t channels, double split_ratio, std::size_t n) {
  if (!(split_ratio >= 0.0 && split_ratio <= 1.0)) {
    throw ArgumentError("split ratio must lie in [0, 1]");
  }
  GroupingPlan plan;
  plan.split_channel = static_cast<std::size_t>(std::lround(split_ratio * static_cast<double>(channels)));
  plan.n = n;
  return plan;
}

void GroupingPlan::validate(const TensorShape& shape) const {
  if (split_channel > shape.c) {
    throw BoundsError("split channel " + std::to_string(split_channel) + " exceeds C=" +
                      std::to_string(shape.c));
  }
  check_divisible(shape, n);
}

DenseTensor channel_slice(const DenseTensor& x, std::size_t begin, std::size_t end) {
  const auto& s = x.shape();
  if (begin > end || end > s.c) {
    throw BoundsError("channel range [" + std::to_string(begin) + "," + std::to_string(end) +
                      ") outside C=" + std::to_string(s.c));
  }
  TensorShape os = s;
  os.c = end - begin;
  DenseTensor out(os);
  const std::size_t positions = s.t * s.b * s.h * s.w;
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t c = 0; c < os.c; ++c) dst[p * os.c + c] = src[p * s.c + begin + c];
  }
  return out;
}

std::pair<DenseTensor, DenseTensor> channel_split(const DenseTensor& x, std::size_t split_channel) {
  if (split_channel > x.shape().c) {
    throw BoundsError("split channel " + std::to_string(split_channel) + " exceeds C=" +
                      std::to_string(x.shape().c));
  }
  return {channel_slice(x, 0, split_channel), channel_slice(x, split_channel, x.shape().c)};
}

DenseTensor channel_concat(const DenseTensor& lo, const DenseTensor& hi) {
  TensorShape a = lo.shape();
  TensorShape b = hi.shape();
  a.c = b.c = 0;
  if (!(a == b)) throw ShapeError("channel_concat: non-channel extents differ");
  TensorShape os = lo.shape();
  os.c = lo.shape().c + hi.shape().c;
  DenseTensor out(os);
  const std::size_t positions = os.t * os.b * os.h * os.w;
  const std::size_t cl = lo.shape().c;
  const std::size_t ch = hi.shape().c;
  auto l = lo.data();
  auto h = hi.data();
  auto d = out.data();
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t c = 0; c < cl; ++c) d[p * os.c + c] = l[p * cl + c];
    for (std::size_t c = 0; c < ch; ++c) d[p * os.c + cl + c] = h[p * ch + c];
  }
  return out;
}

namespace {

// Source row/column of element (gy, gx) of group (i, j).
struct GroupIndexer {
  GroupMode mode;
  std::size_t n, gh, gw;
  std::size_t row(std::size_t i, std::size_t gy) const {
    return mode == GroupMode::strided ? i + gy * n : i * gh + gy;
  }
  std::size_t col(std::size_t j, std::size_t gx) const {
    return mode == GroupMode::strided ? j + gx * n : j * gw + gx;
  }
};

}  // namespace

std::vector<DenseTensor> make_groups(const DenseTensor& x, GroupMode mode, std::size_t n) {
  const auto& s = x.shape();
  check_divisible(s, n);
  TensorShape gs = s;
  gs.h = s.h / n;
  gs.w = s.w / n;
  const GroupIndexer ix{mode, n, gs.h, gs.w};
  std::vector<DenseTensor> groups;
  groups.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      DenseTensor g(gs);
      for (std::size_t t = 0; t < s.t; ++t)
        for (std::size_t b = 0; b < s.b; ++b)
          for (std::size_t gy = 0; gy < gs.h; ++gy)
            for (std::size_t gx = 0; gx < gs.w; ++gx) {
              const std::size_t src = x.index(t, b, ix.row(i, gy), ix.col(j, gx), 0);
              const std::size_t dst = g.index(t, b, gy, gx, 0);
              for (std::size_t c = 0; c < s.c; ++c) g.data()[dst + c] = x.data()[src + c];
            }
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

std::vector<DenseTensor> strided_groups(const DenseTensor& x, std::size_t n) {
  return make_groups(x, GroupMode::strided, n);
}

std::vector<DenseTensor> window_groups(const DenseTensor& x, std::size_t n) {
  return make_groups(x, GroupMode::window, n);
}

DenseTensor regroup(std::span<const DenseTensor> groups, GroupMode mode, std::size_t n,
                    const TensorShape& original) {
  check_divisible(original, n);
  if (groups.size() != n * n) {
    throw ShapeError("regroup expects " + std::to_string(n * n) + " groups, got " +
                     std::to_string(groups.size()));
  }
  TensorShape gs = original;
  gs.h = original.h / n;
  gs.w = original.w / n;
  for (const auto& g : groups) {
    if (!(g.shape() == gs)) {
      throw ShapeError("group shape " + describe(g.shape()) + " does not match expected " +
                       describe(gs));
    }
  }
  const GroupIndexer ix{mode, n, gs.h, gs.w};
  DenseTensor out(original);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const DenseTensor& g = groups[i * n + j];
      for (std::size_t t = 0; t < gs.t; ++t)
        for (std::size_t b = 0; b < gs.b; ++b)
          for (std::size_t gy = 0; gy < gs.h; ++gy)
            for (std::size_t gx = 0; gx < gs.w; ++gx) {
              const std::size_t dst = out.index(t, b, ix.row(i, gy), ix.col(j, gx), 0);
              const std::size_t src = g.index(t, b, gy, gx, 0);
              for (std::size_t c = 0; c < gs.c; ++c) out.data()[dst + c] = g.data()[src + c];
            }
    }
  }
  return out;
}

DenseTensor temporal_sum(const DenseTensor& x) {
  const auto& s = x.shape();
  TensorShape os = s;
  os.t = 1;
  DenseTensor out(os);
  const std::size_t slab = os.size();
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < slab; ++i) dst[i] = src[i];
  for (std::size_t t = 1; t < s.t; ++t)
    for (std::size_t i = 0; i < slab; ++i) dst[i] += src[t * slab + i];
  return out;
}

DenseTensor temporal_average(const DenseTensor& x) {
  DenseTensor out = temporal_sum(x);
  const double inv = static_cast<double>(x.shape().t);
  for (double& v : out.data()) v /= inv;
  return out;
}

DenseTensor broadcast_time(const DenseTensor& x, std::size_t t) {
  if (x.shape().t != 1) throw ShapeError("broadcast_time expects t=1");
  TensorShape os = x.shape();
  os.t = t;
  DenseTensor out(os);
  const std::size_t slab = x.shape().size();
  for (std::size_t s = 0; s < t; ++s)
    for (std::size_t i = 0; i < slab; ++i) out.data()[s * slab + i] = x.data()[i];
  return out;
}

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
  if (!(a.shape() == b.shape())) throw ShapeError("add: shape mismatch");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

}  // namespace spikevit

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

#include <cstddef>
#include <span>
#include <vector>

#include "spikevit/errors.hpp"

namespace spikevit {

// Extents of a (T, B, H, W, C) activation. A zero channel count is allowed
// so that a channel split at 0 or C yields a valid (empty) half.
struct TensorShape {
  std::size_t t = 1;
  std::size_t b = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t c = 1;

  std::size_t tokens() const { return h * w; }
  std::size_t size() const { return t * b * h * w * c; }
  bool operator==(const TensorShape&) const = default;
};

void validate_shape(const TensorShape& shape);

// Row-major (T, B, H, W, C) real tensor; time is the outermost axis so each
// time-step is a contiguous slab.
class DenseTensor {
 public:
  DenseTensor() : DenseTensor(TensorShape{}) {}
  explicit DenseTensor(const TensorShape& shape, double fill = 0.0);
  DenseTensor(const TensorShape& shape, std::vector<double> data);

  const TensorShape& shape() const { return shape_; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  std::size_t index(std::size_t t, std::size_t b, std::size_t y, std::size_t x,
                    std::size_t c) const {
    return (((t * shape_.b + b) * shape_.h + y) * shape_.w + x) * shape_.c + c;
  }
  double& at(std::size_t t, std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
    return data_[index(t, b, y, x, c)];
  }
  double at(std::size_t t, std::size_t b, std::size_t y, std::size_t x,
            std::size_t c) const {
    return data_[index(t, b, y, x, c)];
  }

 private:
  TensorShape shape_;
  std::vector<double> data_;
};

// Spike-valued activation. `codes` holds 0 or +-alpha^t at time-step t; the
// real value carried by an element is `unit * code` (unit is the post-firing
// amplitude lambda * T / s_max of the emitting layer).
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(DenseTensor codes, double unit, double alpha, bool is_signed,
              std::size_t max_spikes);

  const TensorShape& shape() const { return codes_.shape(); }
  const DenseTensor& codes() const { return codes_; }
  double unit() const { return unit_; }
  double alpha() const { return alpha_; }
  bool is_signed() const { return signed_; }
  // Upper bound on nonzero steps per neuron (the temporal group count).
  std::size_t max_spikes() const { return max_spikes_; }

  // Same metadata, different codes (used after regrouping / channel slicing).
  SpikeTensor with_codes(DenseTensor codes) const;
  // Real-valued view: unit * code per element.
  DenseTensor values() const;
  // Throws UnsupportedAmplitudeError unless every element is 0 or an
  // admissible amplitude for its time-step.
  void check_amplitudes() const;
  std::size_t count_nonzero() const;

 private:
  DenseTensor codes_;
  double unit_ = 1.0;
  double alpha_ = 2.0;
  bool signed_ = false;
  std::size_t max_spikes_ = 1;
};

// Small row-major matrix used by the attention kernels and for logits.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class GroupMode { strided, window };

// Spatial grouping descriptor for the two attention halves. Channels
// [0, split_channel) use `global_mode`, [split_channel, C) use `local_mode`;
// both halves are cut into n x n groups.
struct GroupingPlan {
  std::size_t split_channel = 0;
  std::size_t n = 1;
  GroupMode global_mode = GroupMode::strided;
  GroupMode local_mode = GroupMode::window;

  static GroupingPlan from_ratio(std::size_t channels, double split_ratio, std::size_t n);
  std::size_t group_count() const { return n * n; }
  void validate(const TensorShape& shape) const;
};

std::pair<DenseTensor, DenseTensor> channel_split(const DenseTensor& x, std::size_t split_channel);
DenseTensor channel_concat(const DenseTensor& lo, const DenseTensor& hi);
DenseTensor channel_slice(const DenseTensor& x, std::size_t begin, std::size_t end);

std::vector<DenseTensor> strided_groups(const DenseTensor& x, std::size_t n);
std::vector<DenseTensor> window_groups(const DenseTensor& x, std::size_t n);
std::vector<DenseTensor> make_groups(const DenseTensor& x, GroupMode mode, std::size_t n);
DenseTensor regroup(std::span<const DenseTensor> groups, GroupMode mode, std::size_t n,
                    const TensorShape& original);

DenseTensor temporal_average(const DenseTensor& x);
DenseTensor temporal_sum(const DenseTensor& x);
// Repeats a t=1 tensor along time.
DenseTensor broadcast_time(const DenseTensor& x, std::size_t t);

DenseTensor add(const DenseTensor& a, const DenseTensor& b);

}  // namespace spikevit

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
#include <vector>

#include "spikevit/runtime.hpp"
#include "spikevit/tensor.hpp"

namespace spikevit {

enum class ConvKind { pointwise, depthwise, full };

// Weight layouts:
//   full      [ky][kx][c_in][c_out]
//   pointwise [c_in][c_out]
//   depthwise [ky][kx][c]
struct ConvParams {
  ConvKind kind = ConvKind::pointwise;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<double> weights;
  std::vector<double> bias;  // empty: no bias

  static ConvParams make_pointwise(std::size_t c_in, std::size_t c_out, bool with_bias = true);
  static ConvParams make_depthwise(std::size_t channels, std::size_t kernel);
  static ConvParams make_full(std::size_t c_in, std::size_t c_out, std::size_t kernel,
                              std::size_t stride, std::size_t padding, bool with_bias = true);

  std::vector<std::size_t> weight_dims() const;
  std::size_t weight_count() const;
  std::size_t fan_in() const;
  void validate() const;
  TensorShape output_shape(const TensorShape& in) const;
};

// Dense input: multiply-accumulate path, counted as MACs.
DenseTensor conv2d(const DenseTensor& x, const ConvParams& p, const ForwardContext& ctx);

// Spike input: accumulate-only path. Returns weight_gain * (conv of the real
// spike values + bias); the spike unit and the gain are folded into a scaled
// copy of the weights, then each spike adds or subtracts a weight row, and
// the per-exponent partial sums are combined by exponent shifts. Counts one
// SOP per (spike, valid connection) and records the dense-spike bound.
DenseTensor conv2d(const SpikeTensor& x, const ConvParams& p, const ForwardContext& ctx,
                   double weight_gain = 1.0);

}  // namespace spikevit

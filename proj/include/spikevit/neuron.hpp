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

#include <span>
#include <vector>

namespace spikevit {

enum class ResetMode { soft, hard };

struct NeuronParams {
  double mu = 1.0;          // membrane leak; 1 gives the IF neuron
  double theta_pre = 1.0;   // firing threshold
  double theta_post = 1.0;  // emitted amplitude
  double v0 = 0.5;          // initial membrane potential
  ResetMode reset = ResetMode::soft;

  // IF neuron with soft reset and the half-threshold start v0 = theta/2.
  static NeuronParams integrate_and_fire(double theta);
  void validate() const;
};

struct StepResult {
  double m;     // charged potential
  int s;        // binary spike
  double v;     // potential after reset
};

struct NeuronTrace {
  std::vector<double> m;
  std::vector<double> v;
  std::vector<int> s;
};

struct RateSummary {
  double f_avg;       // average emitted amplitude per step
  double i_avg;       // average input current
  double v_residual;  // (v_T - v_0) / T
};

StepResult step(const NeuronParams& params, double v_prev, double input_current);
NeuronTrace run_sequence(const NeuronParams& params, std::span<const double> inputs);
// Only defined for IF (mu = 1) soft-reset traces with theta_post == theta_pre,
// where f_avg == i_avg - v_residual holds exactly.
RateSummary rate_summary(const NeuronTrace& trace, const NeuronParams& params,
                         std::span<const double> inputs);

}  // namespace spikevit

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

#include "spikevit/neuron.hpp"

#include <cmath>

#include "spikevit/errors.hpp"

namespace spikevit {

NeuronParams NeuronParams::integrate_and_fire(double theta) {
  NeuronParams p;
  p.theta_pre = theta;
  p.theta_post = theta;
  p.v0 = theta / 2.0;
  return p;
}

void NeuronParams::validate() const {
  if (!(theta_pre > 0.0)) throw ArgumentError("theta_pre must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) throw ArgumentError("mu must lie in (0, 1]");
  if (!std::isfinite(v0) || !std::isfinite(theta_post)) {
    throw NumericError("neuron parameters must be finite");
  }
}

StepResult step(const NeuronParams& params, double v_prev, double input_current) {
  if (!std::isfinite(v_prev) || !std::isfinite(input_current)) {
    throw NumericError("neuron step received a non-finite value");
  }
  StepResult r{};
  r.m = params.mu * v_prev + input_current;
  r.s = r.m >= params.theta_pre ? 1 : 0;
  r.v = params.reset == ResetMode::soft ? r.m - r.s * params.theta_pre : r.m * (1 - r.s);
  return r;
}

NeuronTrace run_sequence(const NeuronParams& params, std::span<const double> inputs) {
  params.validate();
  if (inputs.empty()) throw ArgumentError("run_sequence needs at least one time-step");
  NeuronTrace trace;
  trace.m.reserve(inputs.size());
  trace.v.reserve(inputs.size());
  trace.s.reserve(inputs.size());
  double v = params.v0;
  for (double current : inputs) {
    const StepResult r = step(params, v, current);
    trace.m.push_back(r.m);
    trace.s.push_back(r.s);
    trace.v.push_back(r.v);
    v = r.v;
  }
  return trace;
}

RateSummary rate_summary(const NeuronTrace& trace, const NeuronParams& params,
                         std::span<const double> inputs) {
  if (params.reset != ResetMode::soft || params.mu != 1.0) {
    throw ContractError("rate identity only holds for IF neurons with soft reset");
  }
  if (params.theta_post != params.theta_pre) {
    throw ContractError("rate identity needs theta_post == theta_pre");
  }
  const std::size_t T = inputs.size();
  if (T == 0 || trace.s.size() != T || trace.v.size() != T) {
    throw ContractError("trace length does not match inputs");
  }
  double emitted = 0.0;
  double charge = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    emitted += trace.s[t] * params.theta_post;
    charge += inputs[t];
  }
  const double steps = static_cast<double>(T);
  return RateSummary{emitted / steps, charge / steps, (trace.v.back() - params.v0) / steps};
}

}  // namespace spikevit

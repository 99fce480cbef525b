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

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spikevit::verify {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Options {
  int threads = 1;
  // Negative control: corrupts one quantizer boundary so that the
  // quantizer check must fail.
  bool inject_fault = false;
};

struct Check {
  std::string group;
  std::string name;
  std::function<Outcome(const Options&)> run;
};

// Every check in a fixed order, grouped by module.
const std::vector<Check>& registry();

struct Result {
  std::string group;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs the checks whose group equals `filter` or whose "group.name" starts
// with it (empty: all). Exceptions count as failures. One line per check is
// written to `log` when given.
std::vector<Result> run(std::string_view filter, const Options& options, std::ostream* log);

// Acceptance criteria.
Outcome energy_arithmetic();
Outcome parameter_counts();
Outcome lossless_conversion();
Outcome spike_count_bound();
Outcome quantizer_equivalence(bool inject_fault = false);
Outcome if_rate_identity();
Outcome grouping_equivalence(int threads = 1);
Outcome multiplication_free(int threads = 1);
Outcome sop_scaling(int threads = 1);
Outcome determinism(int threads = 8);

}  // namespace spikevit::verify

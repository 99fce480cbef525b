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

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "spikevit/verify.hpp"

using namespace spikevit;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// Times the whole verification suite; it must finish within five minutes.
verify::Outcome determinism_and_runtime() {
  verify::Outcome o = verify::determinism(8);
  const double start = now_seconds();
  const auto results = verify::run("", {}, nullptr);
  const double secs = now_seconds() - start;
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  char buf[160];
  std::snprintf(buf, sizeof buf, "; verify suite %zu checks, %zu failed, %.1f s", results.size(),
                failed, secs);
  o.detail += buf;
  if (secs >= 300.0) o.pass = false;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<verify::Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"energy arithmetic", [] { return verify::energy_arithmetic(); }},
      {"parameter counts", [] { return verify::parameter_counts(); }},
      {"lossless conversion", [] { return verify::lossless_conversion(); }},
      {"spike count bound", [] { return verify::spike_count_bound(); }},
      {"binary search quantizer", [] { return verify::quantizer_equivalence(); }},
      {"IF rate identity", [] { return verify::if_rate_identity(); }},
      {"grouping equivalence", [] { return verify::grouping_equivalence(); }},
      {"multiplication-free attention", [] { return verify::multiplication_free(); }},
      {"SOP scaling", [] { return verify::sop_scaling(); }},
      {"determinism and runtime", determinism_and_runtime},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const double start = now_seconds();
    verify::Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %2zu %-30s %s  %s [%.2f s]\n", i + 1, criteria[i].name,
                o.pass ? "PASS" : "FAIL", o.detail.c_str(), now_seconds() - start);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

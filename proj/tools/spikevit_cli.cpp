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

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spikevit/cifar.hpp"
#include "spikevit/errors.hpp"
#include "spikevit/model.hpp"
#include "spikevit/parallel.hpp"
#include "spikevit/profiler.hpp"
#include "spikevit/verify.hpp"
#include "spikevit/weights.hpp"

using namespace spikevit;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kWeights = 3, kInput = 4 };

// Failure carrying the exit code of the stage that raised it.
struct Fatal {
  int code;
  std::string message;
};

struct ModelOptions {
  std::string config;
  std::string preset;
};

struct InputOptions {
  std::string input;      // CIFAR-10 binary batch file
  std::string cifar_dir;  // directory holding test_batch.bin
  std::optional<std::uint64_t> synthetic;
  std::size_t index = 0;
  std::size_t batch = 1;
};

struct Global {
  int threads = 1;
  bool check_spikes = false;
};

template <class Fn>
auto stage(int code, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Fatal{code, e.what()};
  }
}

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  auto* c = cmd->add_option("--config", m.config, "Model config file");
  auto* p = cmd->add_option("--preset", m.preset, "Built-in model: small, base or large");
  c->excludes(p);
}

ModelConfig load_model_config(const ModelOptions& m) {
  return stage(kConfig, [&] {
    if (!m.config.empty()) return load_config(m.config);
    if (!m.preset.empty()) return preset(m.preset);
    throw ConfigError("one of --config or --preset is required");
  });
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
  auto* f = cmd->add_option("--input", in.input, "CIFAR-10 binary batch file");
  auto* d = cmd->add_option("--cifar-dir", in.cifar_dir, "Directory containing test_batch.bin");
  auto* s = cmd->add_option("--synthetic", in.synthetic, "Seed of a synthetic uniform input");
  f->excludes(d)->excludes(s);
  d->excludes(s);
  cmd->add_option("--index", in.index, "First CIFAR-10 record")->capture_default_str();
  cmd->add_option("--batch", in.batch, "Number of images")->capture_default_str();
}

struct Input {
  DenseTensor tensor;
  std::vector<int> labels;  // empty for synthetic inputs
};

Input load_input(const InputOptions& in, const ModelConfig& cfg) {
  return stage(kInput, [&] {
    if (in.batch == 0) throw InputError("--batch must be positive");
    Input out;
    if (in.synthetic) {
      out.tensor = synthetic_input(cfg, in.batch, *in.synthetic);
      return out;
    }
    std::string path = in.input;
    std::optional<std::size_t> expected;
    if (!in.cifar_dir.empty()) {
      path = (std::filesystem::path(in.cifar_dir) / "test_batch.bin").string();
      expected = 10000;
    }
    if (path.empty()) throw InputError("one of --input, --cifar-dir or --synthetic is required");
    if (cfg.in_channels != 3) throw InputError("CIFAR-10 images need a 3-channel model");
    const std::vector<CifarRecord> records = read_cifar10(path, expected);
    if (in.index + in.batch > records.size()) {
      throw InputError("records [" + std::to_string(in.index) + ", " +
                       std::to_string(in.index + in.batch) + ") exceed the " +
                       std::to_string(records.size()) + " in " + path);
    }
    std::span<const CifarRecord> sel(records.data() + in.index, in.batch);
    out.tensor = cifar_to_input(sel, cfg.input_size);
    for (const CifarRecord& r : sel) out.labels.push_back(r.label);
    return out;
  });
}

Model load_model(const ModelConfig& cfg, const std::string& weights) {
  return stage(kWeights, [&] { return Model::from_weights(cfg, load_weights(weights)); });
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string logits_csv(const Matrix& logits) {
  std::string out = "item";
  for (std::size_t c = 0; c < logits.cols; ++c) out += ",logit_" + std::to_string(c);
  out += "\n";
  char buf[64];
  for (std::size_t r = 0; r < logits.rows; ++r) {
    out += std::to_string(r);
    for (std::size_t c = 0; c < logits.cols; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", logits(r, c));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void print_top_k(const Matrix& logits, const std::vector<int>& labels, std::size_t k) {
  k = std::min(k, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    std::vector<std::size_t> order(logits.cols);
    std::iota(order.begin(), order.end(), 0);
    // Ties keep the lower class index.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return logits(r, a) > logits(r, b); });
    std::printf("item %zu", r);
    if (r < labels.size()) std::printf(" label %d", labels[r]);
    std::printf(":");
    for (std::size_t i = 0; i < k; ++i) {
      std::printf(" %zu (%.6g)", order[i], logits(r, order[i]));
    }
    std::printf("\n");
  }
}

void print_profile(const ProfileReport& r) {
  std::printf("%-10s %5s %-10s %15s %15s %12s %8s %12s\n", "stage", "block", "module", "sops",
              "bound", "macs", "rate", "energy_mJ");
  for (const ModuleEntry& e : r.modules) {
    std::printf("%-10s %5d %-10s %15llu %15llu %12llu %8.4f %12.6f\n", e.stage.c_str(), e.block,
                e.kind.c_str(), static_cast<unsigned long long>(e.sops),
                static_cast<unsigned long long>(e.sop_upper_bound),
                static_cast<unsigned long long>(e.macs), e.firing_rate, e.energy_mj);
  }
  std::printf("total SOPs %.4fG  MACs %.4fG  energy %.6f mJ  (without stem %.6f mJ)\n",
              static_cast<double>(r.total_sops) / 1e9, static_cast<double>(r.total_macs) / 1e9,
              r.energy_mj, r.energy_mj_without_stem);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking vision transformer inference and energy profiler"};
  app.require_subcommand(1);
  Global global;
  global.threads = default_thread_count();
  app.add_option("--threads", global.threads, "Worker threads (default: SPIKEVIT_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--check-spikes", global.check_spikes,
               "Validate spike amplitudes after every spiking layer");

  ModelOptions model_opts;
  InputOptions input_opts;
  std::string weights;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t top_k = 5;
  bool saturate = false;
  std::string filter;
  bool inject_fault = false;

  auto* init = app.add_subcommand("init", "Write seeded random weights");
  add_model_options(init, model_opts);
  init->add_option("--seed", seed, "Weight seed")->required();
  init->add_option("--out", out, "Weight file to write")->required();

  auto* params = app.add_subcommand("params", "Print the parameter count per module");
  add_model_options(params, model_opts);

  auto* run = app.add_subcommand("run", "Forward pass; writes logits as CSV");
  add_model_options(run, model_opts);
  add_input_options(run, input_opts);
  run->add_option("--weights", weights, "Weight file")->required();
  run->add_option("--out", out, "Logits CSV to write")->required();
  run->add_option("--top-k", top_k, "Classes printed per item")->capture_default_str();

  auto* profile = app.add_subcommand("profile", "Forward pass with the energy profiler");
  add_model_options(profile, model_opts);
  add_input_options(profile, input_opts);
  profile->add_option("--weights", weights, "Weight file")->required();
  profile->add_option("--out", out, "Profile CSV to write")->required();
  profile->add_flag("--saturate", saturate, "Every spiking layer emits its densest pattern");

  auto* verify = app.add_subcommand("verify", "Run the oracle equivalence suite");
  verify->add_option("--filter", filter, "Module group or check name prefix");
  verify->add_flag("--inject-fault", inject_fault)->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    ForwardContext ctx;
    ctx.threads = global.threads;
    ctx.check_spikes = global.check_spikes;

    if (init->parsed()) {
      const ModelConfig cfg = load_model_config(model_opts);
      const WeightContainer w = stage(kConfig, [&] { return init_weights(cfg, seed); });
      stage(kFailure, [&] { save_weights(w, out); });
      std::printf("wrote %zu entries to %s\n", w.entries().size(), out.c_str());
    } else if (params->parsed()) {
      const ModelConfig cfg = load_model_config(model_opts);
      const ParamCount count = stage(kConfig, [&] { return count_params(cfg); });
      for (const ParamGroup& g : count.modules) std::printf("%-24s %12zu\n", g.module.c_str(), g.count);
      std::printf("%-24s %12zu (%.2fM)\n", "total", count.total,
                  static_cast<double>(count.total) / 1e6);
    } else if (run->parsed()) {
      const ModelConfig cfg = load_model_config(model_opts);
      const Model model = load_model(cfg, weights);
      const Input input = load_input(input_opts, cfg);
      const Matrix logits = stage(kFailure, [&] { return model.forward(input.tensor, ctx); });
      stage(kFailure, [&] { write_text(out, logits_csv(logits)); });
      print_top_k(logits, input.labels, top_k);
    } else if (profile->parsed()) {
      const ModelConfig cfg = load_model_config(model_opts);
      const Model model = load_model(cfg, weights);
      const Input input = load_input(input_opts, cfg);
      Profiler prof;
      ctx.profiler = &prof;
      ctx.saturate = saturate;
      stage(kFailure, [&] { (void)model.forward(input.tensor, ctx); });
      const ProfileReport report = prof.report();
      stage(kFailure, [&] { emit_report(report, out); });
      print_profile(report);
    } else if (verify->parsed()) {
      verify::Options opts;
      opts.threads = global.threads;
      opts.inject_fault = inject_fault;
      const auto start = std::chrono::steady_clock::now();
      const std::vector<verify::Result> results = verify::run(filter, opts, &std::cout);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const auto failed = std::count_if(results.begin(), results.end(),
                                        [](const verify::Result& r) { return !r.pass; });
      if (results.empty()) {
        std::fprintf(stderr, "no checks match '%s'\n", filter.c_str());
        return kFailure;
      }
      std::printf("%zu checks, %td failed, %.2f s\n", results.size(), failed, secs);
      return failed == 0 ? kOk : kFailure;
    }
  } catch (const Fatal& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}

// Copyright 2026 The Coughnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// coughnet: one binary for every pipeline stage.
//
//   coughnet [--config run.json] [--out DIR] <subcommand> [flags]
//
// Exit status: 0 ok, 1 usage, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coughnet/config.hpp"
#include "coughnet/pipeline.hpp"
#include "coughnet/selftest.hpp"

namespace {

using coughnet::Error;
using coughnet::ErrorKind;
using coughnet::RunConfig;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
      return 1;
    case ErrorKind::numerical:
      return 3;
    default:
      return 2;
  }
}

std::map<std::string, bool> parse_clinical(const std::vector<std::string>& items) {
  std::map<std::string, bool> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::usage, "--clinical expects name=0|1, got '" + item + "'");
    }
    const std::string name = item.substr(0, eq), value = item.substr(eq + 1);
    if (value != "0" && value != "1") {
      throw Error(ErrorKind::usage, "--clinical " + name + " must be 0 or 1");
    }
    if (!out.emplace(name, value == "1").second) {
      throw Error(ErrorKind::usage, "--clinical " + name + " given twice");
    }
  }
  return out;
}

void print_split(const coughnet::pipeline::SplitResult& r) {
  static const char* names[] = {"train", "val", "test"};
  for (int s = 0; s < 3; ++s) {
    std::printf("%-5s", names[s]);
    for (int k = 0; k < coughnet::kNumClasses; ++k) {
      std::printf("  class%d %d (%d original)", k + 1, r.total[s][k], r.originals[s][k]);
    }
    std::printf("\n");
  }
}

void print_slices(const coughnet::SliceReport& report) {
  for (const auto& g : report.groups) {
    std::printf("%-16s n=%-5ld micro_auc=", g.name.c_str(), g.count);
    if (g.micro_auc) std::printf("%.4f\n", *g.micro_auc);
    else std::printf("NA\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cough audio three-class screening pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  app.add_option("--config", config_path, "Run config JSON")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides config and $COUGHNET_OUT)");
  app.add_option("--seed", seed, "Seed for every stage");
  app.add_option("--workers", workers, "Featurization worker threads")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Write a synthetic manifest and audio");
  std::optional<int> synth_n;
  synth->add_option("--n", synth_n, "Number of recordings")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", seed, "Seed");
  synth->add_option("--out", out_dir, "Output directory");

  auto* ingest = app.add_subcommand("ingest", "Parse and filter a manifest into records.csv");
  std::string manifest;
  ingest->add_option("manifest", manifest, "Manifest CSV (default <out>/manifest.csv)");

  auto* split = app.add_subcommand("split", "Split, balance and write augmented audio");
  auto* featurize = app.add_subcommand("featurize", "Extract features for the balanced set");
  featurize->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* train = app.add_subcommand("train", "Train the model (and the ablation)");
  auto* eval = app.add_subcommand("eval", "Score the test split");
  std::optional<double> threshold;
  eval->add_option("--threshold", threshold, "Decision threshold on p(class3)");
  auto* slice = app.add_subcommand("slice", "Age and gender slice tables");
  slice->add_option("--threshold", threshold, "Decision threshold on p(class3)");
  auto* report = app.add_subcommand("report", "Tables, ROC plot and summary");
  report->add_option("--threshold", threshold, "Decision threshold on p(class3)");
  auto* run_all = app.add_subcommand("run-all", "Every stage from synth to report");

  auto* predict = app.add_subcommand("predict", "Score one recording");
  std::string model_path, wav_path;
  std::vector<std::string> clinical;
  predict->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--wav", wav_path, "WAV file")->required()->check(CLI::ExistingFile);
  predict->add_option("--clinical", clinical, "name=0|1, repeatable");
  predict->add_option("--threshold", threshold, "Decision threshold on p(class3)");

  auto* selftest = app.add_subcommand("selftest", "Gradient, DSP and AUC oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto start = std::chrono::steady_clock::now();
  const std::string stage = app.get_subcommands().front()->get_name();
  int status = 0;
  try {
    RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    coughnet::apply_environment(config);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (synth_n) config.synth.n = *synth_n;
    if (threshold) config.threshold = *threshold;
    try {
      config.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::usage, e.what());
    }
    namespace pl = coughnet::pipeline;

    if (*synth) {
      const auto r = pl::synth(config);
      std::printf("%s: %d / %d / %d recordings\n", r.manifest.c_str(), r.per_class[0], r.per_class[1],
                  r.per_class[2]);
    } else if (*ingest) {
      const auto r = pl::ingest(config, manifest);
      std::printf("parsed %zu, kept %zu (%d / %d / %d), skipped rows %zu, unlabeled %zu\n", r.parsed,
                  r.kept, r.per_class[0], r.per_class[1], r.per_class[2], r.skipped_rows, r.unlabeled);
    } else if (*split) {
      print_split(pl::split(config));
    } else if (*featurize) {
      const auto r = pl::featurize(config);
      std::printf("%zu records, %zu chunks, store %s\n", r.records, r.triples, r.store_digest.c_str());
    } else if (*train) {
      const auto r = pl::train(config);
      std::printf("epochs %d, best epoch %d, val micro AUC %.4f, checkpoint %s\n", r.epochs,
                  r.best_epoch, r.best_val_micro_auc, r.checkpoint_digest.c_str());
      if (r.ablation_digest) std::printf("ablation checkpoint %s\n", r.ablation_digest->c_str());
    } else if (*eval) {
      const auto r = pl::evaluate(config);
      std::printf("%zu recordings, %zu chunks\nmicro AUC %.4f, macro AUC %.4f\n", r.recordings,
                  r.chunks, r.micro_auc, r.macro_auc);
      for (int k = 0; k < coughnet::kNumClasses; ++k) {
        std::printf("class%d AUC %.4f\n", k + 1, r.class_auc[k]);
      }
      if (r.ablation_micro_auc) std::printf("ablation micro AUC %.4f\n", *r.ablation_micro_auc);
    } else if (*slice) {
      const auto [ages, genders] = pl::slice_all(config);
      print_slices(ages);
      print_slices(genders);
    } else if (*report) {
      std::printf("%s\n", pl::report(config).c_str());
    } else if (*run_all) {
      pl::run_all(config);
      std::printf("%s\n", pl::out_path(config, "report").c_str());
    } else if (*predict) {
      const auto p = pl::predict(config, model_path, wav_path, parse_clinical(clinical));
      std::printf("%.6f %.6f %.6f %s\n", p.probs[0], p.probs[1], p.probs[2],
                  p.positive ? "positive" : "negative");
    } else if (*selftest) {
      bool ok = true;
      for (const auto& c : coughnet::selftest::run_all(config.seed)) {
        std::printf("%s %-24s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.pass;
      }
      status = ok ? 0 : 3;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "coughnet %s: %s\n", stage.c_str(), e.what());
    status = exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "coughnet %s: %s\n", stage.c_str(), e.what());
    status = 2;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "%s: %.2f s\n", stage.c_str(), seconds);
  return status;
}

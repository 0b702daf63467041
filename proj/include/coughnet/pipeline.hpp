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

#ifndef COUGHNET_PIPELINE_HPP_
#define COUGHNET_PIPELINE_HPP_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coughnet/config.hpp"
#include "coughnet/eval.hpp"

// Pipeline stages. Every stage reads and writes files under config.out_dir:
//
//   synth      manifest.csv, audio/<id>.wav
//   ingest     records.csv, skip_report.csv
//   split      splits.csv, balanced.csv, augment_ledger.csv, augmented/<id>.wav
//   featurize  features.store, features.store.keys
//   train      model.ckpt, train_report.csv, [grid.csv],
//              [ablation.ckpt, ablation_train_report.csv]
//   eval       scores_recording.csv, scores_chunk.csv, [ablation_scores_*.csv]
//   slice      slices_auc.csv, slices_threshold.csv
//   report     report/*
//
// and a stamp stamps/<stage>.json with the config digest, the seed and the
// SHA-256 of each output.
namespace coughnet::pipeline {

std::string out_path(const RunConfig& config, const std::string& name);

struct SynthResult {
  std::array<int, kNumClasses> per_class{};
  std::string manifest;
};
SynthResult synth(const RunConfig& config);

struct IngestResult {
  std::size_t parsed = 0;
  std::size_t kept = 0;
  std::size_t skipped_rows = 0;
  std::size_t unlabeled = 0;
  std::array<int, kNumClasses> per_class{};
};
/// Defaults to <out>/manifest.csv when `manifest` is empty.
IngestResult ingest(const RunConfig& config, const std::string& manifest = "");

struct SplitResult {
  /// [split][class] record counts after balancing, and originals among them.
  std::array<std::array<int, kNumClasses>, 3> total{};
  std::array<std::array<int, kNumClasses>, 3> originals{};
  std::size_t children = 0;
};
SplitResult split(const RunConfig& config);

struct FeaturizeResult {
  std::size_t records = 0;
  std::size_t triples = 0;
  std::string store_digest;
};
FeaturizeResult featurize(const RunConfig& config);

struct TrainOutcome {
  std::string checkpoint_digest;
  int epochs = 0;
  int best_epoch = 0;
  double best_val_micro_auc = 0.0;
  std::optional<std::string> ablation_digest;
};
TrainOutcome train(const RunConfig& config);

struct EvalOutcome {
  std::size_t recordings = 0;
  std::size_t chunks = 0;
  double micro_auc = 0.0;
  double macro_auc = 0.0;
  std::array<double, kNumClasses> class_auc{};
  std::optional<double> ablation_micro_auc;
};
EvalOutcome evaluate(const RunConfig& config);

SliceReport slice(const RunConfig& config, Slicer slicer);
/// Writes both slice tables; returns the age and gender reports.
std::pair<SliceReport, SliceReport> slice_all(const RunConfig& config);

/// Returns the report directory.
std::string report(const RunConfig& config);

/// Everything from synth to report.
void run_all(const RunConfig& config);

/// Decodes, resamples to config.target_rate when needed.
Signal load_audio(const std::string& path, int target_rate);

struct Prediction {
  std::array<double, kNumClasses> probs{};
  int chunks = 0;
  bool positive = false;
};
/// `clinical` maps schema names to 0/1; unknown names are a usage error.
Prediction predict(const RunConfig& config, const std::string& checkpoint,
                   const std::string& wav, const std::map<std::string, bool>& clinical);

}  // namespace coughnet::pipeline

#endif  // COUGHNET_PIPELINE_HPP_

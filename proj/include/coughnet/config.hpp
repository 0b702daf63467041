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

#ifndef COUGHNET_CONFIG_HPP_
#define COUGHNET_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "coughnet/audio.hpp"
#include "coughnet/augment.hpp"
#include "coughnet/features.hpp"
#include "coughnet/ingest.hpp"
#include "coughnet/model.hpp"
#include "coughnet/split_train.hpp"

namespace coughnet {

/// Parameters of the synthetic corpus generator.
struct SynthConfig {
  int n = 600;
  SynthParams audio = [] {
    SynthParams p;
    p.confusion = 0.35;
    return p;
  }();
  /// Share of records written without an age.
  double missing_age = 0.05;
};

/// Every stage's parameters. One `seed` drives the split, initialization,
/// dropout, shuffling and the synthetic corpus.
struct RunConfig {
  std::string out_dir = "out";
  std::uint64_t seed = 7;
  int workers = 1;

  SynthConfig synth;
  double certainty_threshold = 0.9;
  ClinicalSchema schema = ClinicalSchema::default_schema();

  int target_rate = 22050;
  double chunk_seconds = 2.0;
  double hop_seconds = 2.0;
  /// image_size is taken from model.image_size.
  FeatureConfig features;
  AugmentRanges augment;

  SplitPlan split;
  ModelConfig model;
  /// When non-empty, train runs a grid search over these configs.
  std::vector<ModelConfig> grid;
  TrainConfig train;
  bool ablation = true;
  double threshold = 0.9;

  /// Canonical JSON with sorted keys.
  std::string to_json() const;
  /// Unknown keys anywhere are a configuration error. Missing keys keep
  /// their defaults.
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);

  /// SHA-256 of to_json() with out_dir and workers removed, so moving the
  /// output or changing the worker count keeps the digest.
  std::string digest() const;

  void validate() const;
  /// FeatureConfig with image_size set from the model.
  FeatureConfig feature_config() const;
  /// Copies with `seed` applied; the seed fields of split, model, grid and
  /// train are otherwise ignored.
  SplitPlan split_plan() const;
  ModelConfig model_config() const;
  std::vector<ModelConfig> grid_configs() const;
  TrainConfig train_config() const;
};

/// Environment variable that replaces out_dir when set and non-empty.
inline constexpr const char* kOutDirEnv = "COUGHNET_OUT";
void apply_environment(RunConfig& config);

}  // namespace coughnet

#endif  // COUGHNET_CONFIG_HPP_

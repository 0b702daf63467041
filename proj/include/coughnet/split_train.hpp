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

#ifndef COUGHNET_SPLIT_TRAIN_HPP_
#define COUGHNET_SPLIT_TRAIN_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coughnet/augment.hpp"
#include "coughnet/eval.hpp"
#include "coughnet/model.hpp"
#include "coughnet/types.hpp"

namespace coughnet {

struct SplitPlan {
  std::array<double, 3> fractions = {0.8, 0.1, 0.1};
  /// Records per class after balancing, by split.
  std::array<int, 3> targets = {600, 75, 75};
  std::uint64_t seed = 7;

  void validate() const;
};

/// Largest-remainder rounding of n * fractions; equal remainders favour the
/// earlier split. When n >= 3 every split receives at least one item.
std::array<int, 3> split_counts(int n, const std::array<double, 3>& fractions);

/// Assigns a split to every original, per class, after a seeded shuffle.
/// Throws Error(cannot_split) for a class with fewer than 3 originals.
RecordSet split_records(const RecordSet& originals, const SplitPlan& plan);

struct BalancedSplits {
  RecordSet train, val, test;

  const RecordSet& operator[](Split s) const;
  /// train, val, test concatenated.
  RecordSet all() const;
};

/// Balances each split independently to plan.targets per class.
BalancedSplits assemble_balanced_splits(const RecordSet& records, const SplitPlan& plan,
                                        const AugmentRanges& ranges = {});

/// Follows parent links to the original id. A parent missing from `all` is
/// taken as the root. Throws Error(schema) on a cycle.
std::string root_original(const Record& record, const RecordSet& all);

/// Root ids that occur in more than one split.
std::vector<std::string> leakage_violations(const RecordSet& records);

struct TrainConfig {
  int max_epochs = 100;
  int batch_size = 32;
  int patience = 5;
  std::uint64_t seed = 7;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_micro_auc = 0.0;
};

struct TrainRunReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  std::string checkpoint_digest;
  std::string config_digest;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Model model;
  TrainRunReport report;
};

/// Per-record probability means over the given chunks, in first-seen order.
std::vector<ScoredExample> score_recordings(Model& model,
                                            const std::vector<const FeatureTriple*>& triples);

/// Mini-batch Adam on softmax cross-entropy with early stopping on the
/// per-recording validation micro-AUC. Returns the best-validation snapshot.
/// Throws Error(numerical) on a non-finite loss.
TrainResult train(Model model, const std::vector<const FeatureTriple*>& train_set,
                  const std::vector<const FeatureTriple*>& val_set, const TrainConfig& config);

/// CSV with one row per epoch; the best epoch is flagged in the last column.
void write_train_report(const TrainRunReport& report, const std::string& path);

struct GridRow {
  int index = 0;
  ModelConfig config;
  bool ok = false;
  std::string error;
  double val_micro_auc = 0.0;
  long parameters = 0;
  int epochs = 0;
};

struct GridResult {
  int best_index = -1;
  ModelConfig best;
  std::vector<GridRow> rows;
};

/// Trains every config; the winner has the highest validation micro-AUC,
/// then fewer parameters, then the lower index. Failed configs become rows
/// with ok = false. Throws Error(parameter) for an empty grid and
/// Error(configuration) when every config fails.
GridResult grid_search(const std::vector<ModelConfig>& grid,
                       const std::vector<const FeatureTriple*>& train_set,
                       const std::vector<const FeatureTriple*>& val_set, const TrainConfig& config);

void write_grid_table(const GridResult& result, const std::string& path);

}  // namespace coughnet

#endif  // COUGHNET_SPLIT_TRAIN_HPP_

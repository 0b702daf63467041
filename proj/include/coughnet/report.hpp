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

#ifndef COUGHNET_REPORT_HPP_
#define COUGHNET_REPORT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coughnet/eval.hpp"

namespace coughnet {

/// Scores for one trained model, per recording and per chunk.
struct ModelScores {
  std::vector<ScoredExample> recordings;
  std::vector<ScoredExample> chunks;
  std::string checkpoint_digest;
  long parameters = 0;
};

struct ReportInputs {
  ModelScores multi_branch;
  std::optional<ModelScores> resnet_only;
  double threshold = 0.9;
  std::string config_digest;
  std::uint64_t seed = 0;
};

/// Writes auc_table.csv, auc_table_chunks.csv, threshold_table.csv,
/// slices_auc.csv, slices_threshold.csv, roc.svg and summary.json into
/// out_dir (created if needed). Absent metrics are written as NA.
/// Returns the written file names in order. Throws Error(undefined_metric)
/// when the multi-branch recordings miss a class.
std::vector<std::string> emit_report(const ReportInputs& inputs, const std::string& out_dir);

/// slices_auc.csv and slices_threshold.csv (class3 at the threshold) for
/// the age and gender slicers.
std::vector<std::string> write_slice_tables(const SliceReport& ages, const SliceReport& genders,
                                            double threshold, const std::string& out_dir);

/// Self-contained SVG with the three per-class curves and the micro and
/// macro averages, one <path> each.
std::string roc_svg(const ModelEvaluation& evaluation);

/// Score table: record_id, chunk_index (chunks only), label, p_class1..3,
/// age, gender.
void write_scores_csv(const std::string& path, const std::vector<ScoredExample>& scores,
                      const std::vector<int>* chunk_indices = nullptr);
std::vector<ScoredExample> read_scores_csv(const std::string& path);

}  // namespace coughnet

#endif  // COUGHNET_REPORT_HPP_

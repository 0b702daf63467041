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

#ifndef COUGHNET_EVAL_HPP_
#define COUGHNET_EVAL_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "coughnet/types.hpp"

namespace coughnet {

struct ScoredExample {
  std::string record_id;
  ClassLabel true_label = ClassLabel::asymptomatic_negative;
  std::array<double, kNumClasses> probs{};
  std::optional<int> age;
  std::optional<Gender> gender;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  /// Scores >= threshold are called positive at this point.
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Binary ROC with tied scores grouped into one step; AUC by trapezoids.
/// Throws Error(undefined_metric) unless both outcomes occur.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& positive);

/// Scores are the target-class probability.
RocCurve roc_auc_one_vs_all(const std::vector<ScoredExample>& examples, ClassLabel target);

/// Pools the 3N binarized (probability, indicator) pairs into one curve.
RocCurve micro_average_roc(const std::vector<ScoredExample>& examples);
double micro_average_auc(const std::vector<ScoredExample>& examples);

/// Mean of per-class TPRs interpolated on the union of their FPR grids.
/// The reported auc is the unweighted mean of the per-class AUCs.
RocCurve macro_average_roc(const std::vector<ScoredExample>& examples);
double macro_average_auc(const std::vector<ScoredExample>& examples);

struct ConfusionMetrics {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  /// Absent when the denominator is zero.
  std::optional<double> sensitivity, specificity, ppv, npv;
  /// Share of examples whose true label is the target class.
  double prevalence = 0.0;
};

/// Predicted positive iff prob(target) >= threshold.
ConfusionMetrics threshold_metrics(const std::vector<ScoredExample>& examples, ClassLabel target,
                                   double threshold = 0.9);

enum class Slicer { age_bins, gender };

/// 0: age <= 20, 1: (20, 40], 2: (40, 60], 3: > 60.
int age_group(int age);
std::string_view age_group_name(int group);

struct SliceGroup {
  std::string name;
  long count = 0;
  /// Absent when the group lacks positives or negatives for that class.
  std::array<std::optional<double>, kNumClasses> class_auc;
  std::optional<double> micro_auc;
  ConfusionMetrics positive_class;
};

struct SliceReport {
  Slicer slicer = Slicer::age_bins;
  std::vector<SliceGroup> groups;
  /// Examples without the slice field (or with gender other).
  long excluded = 0;
};

/// Group metrics are exactly those of evaluating the filtered example list.
SliceReport slice_analysis(const std::vector<ScoredExample>& examples, Slicer slicer,
                           double threshold = 0.9);

/// Per-class, micro and macro results for one model.
struct ModelEvaluation {
  std::array<RocCurve, kNumClasses> class_roc;
  RocCurve micro;
  RocCurve macro;
  std::array<ConfusionMetrics, kNumClasses> thresholded;
};

ModelEvaluation evaluate(const std::vector<ScoredExample>& examples, double threshold = 0.9);

}  // namespace coughnet

#endif  // COUGHNET_EVAL_HPP_

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

#include "coughnet/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "coughnet/common.hpp"

namespace coughnet {

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) {
    throw Error(ErrorKind::parameter, "scores and labels differ in length");
  }
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double neg = static_cast<double>(positive.size()) - pos;
  if (pos == 0 || neg == 0) {
    throw Error(ErrorKind::undefined_metric, "ROC needs at least one positive and one negative");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (positive[order[i]] ? tp : fp) += 1.0;
    }
    const RocPoint p{fp / neg, tp / pos, s};
    const RocPoint& q = roc.points.back();
    roc.auc += (p.fpr - q.fpr) * (p.tpr + q.tpr) / 2.0;
    roc.points.push_back(p);
  }
  return roc;
}

RocCurve roc_auc_one_vs_all(const std::vector<ScoredExample>& examples, ClassLabel target) {
  std::vector<double> scores;
  std::vector<bool> positive;
  scores.reserve(examples.size());
  positive.reserve(examples.size());
  for (const auto& e : examples) {
    scores.push_back(e.probs[static_cast<std::size_t>(class_index(target))]);
    positive.push_back(e.true_label == target);
  }
  return roc_curve(scores, positive);
}

namespace {

void require_all_classes(const std::vector<ScoredExample>& examples) {
  std::array<bool, kNumClasses> seen{};
  for (const auto& e : examples) seen[static_cast<std::size_t>(class_index(e.true_label))] = true;
  for (int k = 0; k < kNumClasses; ++k) {
    if (!seen[static_cast<std::size_t>(k)]) {
      throw Error(ErrorKind::undefined_metric,
                  std::string("averaged AUC needs every class; missing ") +
                      std::string(class_name(class_from_index(k))));
    }
  }
}

// Upper TPR of a step curve at fpr x, linear between distinct FPR values.
double interpolate_tpr(const std::vector<RocPoint>& pts, double x) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].fpr == x) best = std::max(best, pts[i].tpr);
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const RocPoint& a = pts[i - 1];
    const RocPoint& b = pts[i];
    if (a.fpr < x && x < b.fpr) {
      best = std::max(best, a.tpr + (b.tpr - a.tpr) * (x - a.fpr) / (b.fpr - a.fpr));
    }
  }
  return best;
}

}  // namespace

RocCurve micro_average_roc(const std::vector<ScoredExample>& examples) {
  require_all_classes(examples);
  std::vector<double> scores;
  std::vector<bool> positive;
  for (const auto& e : examples) {
    for (int k = 0; k < kNumClasses; ++k) {
      scores.push_back(e.probs[static_cast<std::size_t>(k)]);
      positive.push_back(class_index(e.true_label) == k);
    }
  }
  return roc_curve(scores, positive);
}

double micro_average_auc(const std::vector<ScoredExample>& examples) {
  return micro_average_roc(examples).auc;
}

RocCurve macro_average_roc(const std::vector<ScoredExample>& examples) {
  require_all_classes(examples);
  std::array<RocCurve, kNumClasses> curves;
  std::vector<double> grid;
  double auc = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    curves[static_cast<std::size_t>(k)] = roc_auc_one_vs_all(examples, class_from_index(k));
    auc += curves[static_cast<std::size_t>(k)].auc;
    for (const auto& p : curves[static_cast<std::size_t>(k)].points) grid.push_back(p.fpr);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  RocCurve macro;
  macro.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  for (double x : grid) {
    double tpr = 0.0;
    for (const auto& c : curves) tpr += interpolate_tpr(c.points, x);
    macro.points.push_back({x, tpr / kNumClasses, std::numeric_limits<double>::quiet_NaN()});
  }
  macro.auc = auc / kNumClasses;
  return macro;
}

double macro_average_auc(const std::vector<ScoredExample>& examples) {
  require_all_classes(examples);
  double auc = 0.0;
  for (ClassLabel c : kAllClasses) auc += roc_auc_one_vs_all(examples, c).auc;
  return auc / kNumClasses;
}

ConfusionMetrics threshold_metrics(const std::vector<ScoredExample>& examples, ClassLabel target,
                                   double threshold) {
  ConfusionMetrics m;
  const auto k = static_cast<std::size_t>(class_index(target));
  for (const auto& e : examples) {
    const bool actual = e.true_label == target;
    const bool called = e.probs[k] >= threshold;
    if (actual && called) ++m.tp;
    else if (actual) ++m.fn;
    else if (called) ++m.fp;
    else ++m.tn;
  }
  auto ratio = [](long num, long den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.sensitivity = ratio(m.tp, m.tp + m.fn);
  m.specificity = ratio(m.tn, m.tn + m.fp);
  m.ppv = ratio(m.tp, m.tp + m.fp);
  m.npv = ratio(m.tn, m.tn + m.fn);
  m.prevalence = examples.empty() ? 0.0
                                  : static_cast<double>(m.tp + m.fn) /
                                        static_cast<double>(examples.size());
  return m;
}

int age_group(int age) {
  if (age <= 20) return 0;
  if (age <= 40) return 1;
  if (age <= 60) return 2;
  return 3;
}

std::string_view age_group_name(int group) {
  switch (group) {
    case 0: return "age<=20";
    case 1: return "20<age<=40";
    case 2: return "40<age<=60";
    case 3: return "age>60";
  }
  throw Error(ErrorKind::parameter, "age group out of range");
}

SliceReport slice_analysis(const std::vector<ScoredExample>& examples, Slicer slicer,
                           double threshold) {
  SliceReport report;
  report.slicer = slicer;
  const int n_groups = slicer == Slicer::age_bins ? 4 : 2;
  std::vector<std::vector<ScoredExample>> members(static_cast<std::size_t>(n_groups));
  for (const auto& e : examples) {
    int g = -1;
    if (slicer == Slicer::age_bins) {
      if (e.age) g = age_group(*e.age);
    } else if (e.gender && *e.gender != Gender::other) {
      g = *e.gender == Gender::male ? 0 : 1;
    }
    if (g < 0) {
      ++report.excluded;
      continue;
    }
    members[static_cast<std::size_t>(g)].push_back(e);
  }
  for (int g = 0; g < n_groups; ++g) {
    const auto& group = members[static_cast<std::size_t>(g)];
    SliceGroup out;
    out.name = slicer == Slicer::age_bins ? std::string(age_group_name(g))
                                          : std::string(gender_name(g == 0 ? Gender::male
                                                                           : Gender::female));
    out.count = static_cast<long>(group.size());
    for (ClassLabel c : kAllClasses) {
      try {
        out.class_auc[static_cast<std::size_t>(class_index(c))] = roc_auc_one_vs_all(group, c).auc;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_metric) throw;
      }
    }
    try {
      out.micro_auc = micro_average_auc(group);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_metric) throw;
    }
    out.positive_class = threshold_metrics(group, ClassLabel::covid_positive, threshold);
    report.groups.push_back(std::move(out));
  }
  return report;
}

ModelEvaluation evaluate(const std::vector<ScoredExample>& examples, double threshold) {
  ModelEvaluation ev;
  for (ClassLabel c : kAllClasses) {
    const auto k = static_cast<std::size_t>(class_index(c));
    ev.class_roc[k] = roc_auc_one_vs_all(examples, c);
    ev.thresholded[k] = threshold_metrics(examples, c, threshold);
  }
  ev.micro = micro_average_roc(examples);
  ev.macro = macro_average_roc(examples);
  return ev;
}

}  // namespace coughnet

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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coughnet/eval.hpp"
#include "coughnet/oracles.hpp"

namespace coughnet {
namespace {

double auc_of(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<double> scores = pos;
  scores.insert(scores.end(), neg.begin(), neg.end());
  std::vector<bool> positive(pos.size(), true);
  positive.resize(scores.size(), false);
  return roc_curve(scores, positive).auc;
}

ScoredExample example(int label, std::array<double, 3> probs) {
  ScoredExample e;
  e.record_id = "e";
  e.true_label = class_from_index(label);
  e.probs = probs;
  return e;
}

// Random simplex rows with coarse quantization so ties are common.
std::vector<ScoredExample> random_examples(Rng& rng, int n, int levels = 6) {
  std::uniform_int_distribution<int> q(1, levels);
  std::vector<ScoredExample> out;
  for (int i = 0; i < n; ++i) {
    std::array<double, 3> p{double(q(rng)), double(q(rng)), double(q(rng))};
    const double s = p[0] + p[1] + p[2];
    for (auto& v : p) v /= s;
    out.push_back(example(i % 3, p));
  }
  return out;
}

TEST(RocTest, PerfectSeparation) { EXPECT_DOUBLE_EQ(auc_of({0.9, 0.8}, {0.1, 0.2}), 1.0); }

TEST(RocTest, AllTiedIsHalf) { EXPECT_DOUBLE_EQ(auc_of({0.5, 0.5}, {0.5, 0.5, 0.5}), 0.5); }

TEST(RocTest, FiveSixths) {
  const std::vector<double> pos{0.8, 0.4}, neg{0.6, 0.3, 0.1};
  EXPECT_NEAR(auc_of(pos, neg), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(oracle::pair_count_auc(pos, neg), 5.0 / 6.0, 1e-12);
}

TEST(RocTest, CurveEndpointsAndMonotone) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> s(40);
  std::vector<bool> y(40);
  for (int i = 0; i < 40; ++i) {
    s[i] = std::round(u(rng) * 10) / 10;
    y[i] = i % 3 == 0;
  }
  const RocCurve roc = roc_curve(s, y);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.front().tpr, 0.0);
  EXPECT_EQ(roc.points.back().fpr, 1.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
    EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
    EXPECT_LT(roc.points[i].threshold, roc.points[i - 1].threshold);
  }
}

TEST(RocTest, SingleClassIsUndefined) {
  try {
    auc_of({0.1, 0.2}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined_metric);
  }
  EXPECT_THROW(roc_curve({0.1}, {true, false}), Error);
}

TEST(RocTest, TrapezoidMatchesPairCountWithTies) {
  Rng rng(11);
  std::uniform_int_distribution<int> size(2, 50);
  std::uniform_int_distribution<int> level(0, 7);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = size(rng);
    std::vector<double> pos, neg;
    for (int i = 0; i < n; ++i) {
      const double s = level(rng) / 7.0;
      (i == 0 ? pos : i == 1 ? neg : (rng() & 1) ? pos : neg).push_back(s);
    }
    ASSERT_NEAR(auc_of(pos, neg), oracle::pair_count_auc(pos, neg), 1e-9) << "trial " << trial;
  }
}

TEST(RocTest, InvariantUnderIncreasingTransform) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos(7), neg(9), tpos, tneg;
    for (auto& v : pos) v = std::round(u(rng) * 4) / 4;
    for (auto& v : neg) v = std::round(u(rng) * 4) / 4;
    for (double v : pos) tpos.push_back(std::exp(3 * v) + 1);
    for (double v : neg) tneg.push_back(std::exp(3 * v) + 1);
    ASSERT_NEAR(auc_of(pos, neg), auc_of(tpos, tneg), 1e-12);
  }
}

TEST(AverageTest, PerfectClassifier) {
  std::vector<ScoredExample> ex;
  for (int i = 0; i < 9; ++i) {
    std::array<double, 3> p{0.05, 0.05, 0.05};
    p[i % 3] = 0.9;
    ex.push_back(example(i % 3, p));
  }
  EXPECT_DOUBLE_EQ(micro_average_auc(ex), 1.0);
  EXPECT_DOUBLE_EQ(macro_average_auc(ex), 1.0);
}

TEST(AverageTest, UniformProbabilitiesGiveHalf) {
  std::vector<ScoredExample> ex;
  for (int i = 0; i < 9; ++i) ex.push_back(example(i % 3, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  EXPECT_DOUBLE_EQ(micro_average_auc(ex), 0.5);
}

TEST(AverageTest, MicroMatchesPooledPairCount) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ex = random_examples(rng, 12);
    Eigen::MatrixXd probs(12, 3);
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) {
      for (int k = 0; k < 3; ++k) probs(i, k) = ex[i].probs[k];
      labels.push_back(class_index(ex[i].true_label));
    }
    ASSERT_NEAR(micro_average_auc(ex), oracle::pooled_pair_count_auc(probs, labels), 1e-9);
  }
}

TEST(AverageTest, MacroIsMeanOfClassAucs) {
  Rng rng(19);
  const auto ex = random_examples(rng, 30);
  double mean = 0;
  for (ClassLabel c : kAllClasses) mean += roc_auc_one_vs_all(ex, c).auc / 3;
  EXPECT_NEAR(macro_average_auc(ex), mean, 1e-12);
  const RocCurve macro = macro_average_roc(ex);
  EXPECT_NEAR(macro.auc, mean, 1e-12);
  EXPECT_EQ(macro.points.back().fpr, 1.0);
  EXPECT_NEAR(macro.points.back().tpr, 1.0, 1e-12);
}

TEST(AverageTest, MicroInvariantUnderClassPermutation) {
  Rng rng(23);
  const std::array<int, 3> perm{2, 0, 1};
  for (int trial = 0; trial < 100; ++trial) {
    const auto ex = random_examples(rng, 15);
    auto twin = ex;
    for (std::size_t i = 0; i < ex.size(); ++i) {
      twin[i].true_label = class_from_index(perm[class_index(ex[i].true_label)]);
      for (int k = 0; k < 3; ++k) twin[i].probs[perm[k]] = ex[i].probs[k];
    }
    ASSERT_NEAR(micro_average_auc(ex), micro_average_auc(twin), 1e-12);
  }
}

TEST(AverageTest, MissingClassIsUndefined) {
  std::vector<ScoredExample> ex{example(0, {0.6, 0.2, 0.2}), example(1, {0.2, 0.6, 0.2})};
  try {
    micro_average_auc(ex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined_metric);
  }
  EXPECT_THROW(macro_average_auc(ex), Error);
}

std::vector<ScoredExample> binary_set(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<ScoredExample> ex;
  for (double s : pos) ex.push_back(example(2, {(1 - s) / 2, (1 - s) / 2, s}));
  for (double s : neg) ex.push_back(example(0, {1 - s, 0, s}));
  return ex;
}

TEST(ThresholdTest, HandCountedConfusion) {
  const auto m = threshold_metrics(binary_set({0.95, 0.92, 0.5}, {0.1, 0.91, 0.2}),
                                   ClassLabel::covid_positive, 0.9);
  EXPECT_EQ(m.tp, 2);
  EXPECT_EQ(m.fn, 1);
  EXPECT_EQ(m.fp, 1);
  EXPECT_EQ(m.tn, 2);
  EXPECT_DOUBLE_EQ(*m.sensitivity, 2.0 / 3);
  EXPECT_DOUBLE_EQ(*m.specificity, 2.0 / 3);
  EXPECT_DOUBLE_EQ(*m.ppv, 2.0 / 3);
  EXPECT_DOUBLE_EQ(*m.npv, 2.0 / 3);
  EXPECT_DOUBLE_EQ(m.prevalence, 0.5);
}

TEST(ThresholdTest, PerfectScores) {
  const auto m = threshold_metrics(binary_set({1, 1}, {0, 0, 0}), ClassLabel::covid_positive);
  EXPECT_EQ(*m.sensitivity, 1.0);
  EXPECT_EQ(*m.specificity, 1.0);
  EXPECT_EQ(*m.ppv, 1.0);
  EXPECT_EQ(*m.npv, 1.0);
}

TEST(ThresholdTest, NoPredictedPositivesLeavesPpvAbsent) {
  const auto m = threshold_metrics(binary_set({0.3, 0.2}, {0.1}), ClassLabel::covid_positive);
  EXPECT_FALSE(m.ppv.has_value());
  EXPECT_EQ(*m.sensitivity, 0.0);
}

TEST(ThresholdTest, InclusiveBoundary) {
  const auto m = threshold_metrics(binary_set({0.9}, {0.2}), ClassLabel::covid_positive, 0.9);
  EXPECT_EQ(m.tp, 1);
}

TEST(ThresholdTest, ConfusionIdentities) {
  Rng rng(29);
  const auto ex = random_examples(rng, 60);
  for (ClassLabel c : kAllClasses) {
    long pos = 0;
    for (const auto& e : ex) pos += e.true_label == c;
    for (double t : {0.0, 0.2, 0.5, 0.9, 1.5}) {
      const auto m = threshold_metrics(ex, c, t);
      EXPECT_EQ(m.tp + m.fn, pos);
      EXPECT_EQ(m.tn + m.fp, static_cast<long>(ex.size()) - pos);
    }
    EXPECT_EQ(*threshold_metrics(ex, c, 0.0).sensitivity, 1.0);
    EXPECT_EQ(*threshold_metrics(ex, c, 1.5).sensitivity, 0.0);
  }
}

TEST(SliceTest, AgeBoundaries) {
  EXPECT_EQ(age_group(0), 0);
  EXPECT_EQ(age_group(20), 0);
  EXPECT_EQ(age_group(21), 1);
  EXPECT_EQ(age_group(40), 1);
  EXPECT_EQ(age_group(41), 2);
  EXPECT_EQ(age_group(60), 2);
  EXPECT_EQ(age_group(61), 3);
  EXPECT_EQ(age_group_name(0), "age<=20");
  EXPECT_EQ(age_group_name(1), "20<age<=40");
}

TEST(SliceTest, MatchesFilterThenEvaluate) {
  Rng rng(31);
  auto ex = random_examples(rng, 240);
  std::uniform_int_distribution<int> age(1, 90);
  std::array<long, 4> counts{};
  long missing = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (i % 17 == 0) {
      ++missing;
      continue;
    }
    ex[i].age = age(rng);
    ++counts[age_group(*ex[i].age)];
    ex[i].gender = i % 5 == 0 ? Gender::other : i % 2 ? Gender::male : Gender::female;
  }
  const SliceReport report = slice_analysis(ex, Slicer::age_bins);
  ASSERT_EQ(report.groups.size(), 4u);
  EXPECT_EQ(report.excluded, missing);
  for (int g = 0; g < 4; ++g) {
    std::vector<ScoredExample> filtered;
    for (const auto& e : ex) {
      if (e.age && age_group(*e.age) == g) filtered.push_back(e);
    }
    const SliceGroup& group = report.groups[g];
    EXPECT_EQ(group.count, counts[g]);
    EXPECT_EQ(group.count, static_cast<long>(filtered.size()));
    EXPECT_EQ(*group.micro_auc, micro_average_auc(filtered));
    for (ClassLabel c : kAllClasses) {
      EXPECT_EQ(*group.class_auc[class_index(c)], roc_auc_one_vs_all(filtered, c).auc);
    }
    const auto m = threshold_metrics(filtered, ClassLabel::covid_positive);
    EXPECT_EQ(group.positive_class.tp, m.tp);
    EXPECT_EQ(group.positive_class.fp, m.fp);
  }

  const SliceReport genders = slice_analysis(ex, Slicer::gender);
  ASSERT_EQ(genders.groups.size(), 2u);
  EXPECT_EQ(genders.groups[0].name, "male");
  EXPECT_EQ(genders.groups[1].name, "female");
  EXPECT_EQ(genders.groups[0].count + genders.groups[1].count + genders.excluded,
            static_cast<long>(ex.size()));
}

TEST(SliceTest, SingleClassGroupIsUndefinedNotFatal) {
  std::vector<ScoredExample> ex;
  for (int i = 0; i < 6; ++i) {
    auto e = example(i % 3, {0.4, 0.3, 0.3});
    e.age = i % 3 == 0 ? 10 : 30;
    ex.push_back(e);
  }
  const SliceReport report = slice_analysis(ex, Slicer::age_bins);
  EXPECT_FALSE(report.groups[0].micro_auc.has_value());
  EXPECT_FALSE(report.groups[0].class_auc[0].has_value());
  EXPECT_EQ(report.groups[0].count, 2);
  EXPECT_EQ(report.groups[3].count, 0);
}

TEST(EvaluateTest, BundlesAllMetrics) {
  Rng rng(37);
  const auto ex = random_examples(rng, 30);
  const ModelEvaluation ev = evaluate(ex);
  EXPECT_EQ(ev.micro.auc, micro_average_auc(ex));
  EXPECT_EQ(ev.macro.auc, macro_average_auc(ex));
  EXPECT_EQ(ev.class_roc[2].auc, roc_auc_one_vs_all(ex, ClassLabel::covid_positive).auc);
  EXPECT_EQ(ev.thresholded[1].tp, threshold_metrics(ex, ClassLabel::symptomatic_negative).tp);
}

}  // namespace
}  // namespace coughnet

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

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "coughnet/augment.hpp"
#include "coughnet/dsp.hpp"

namespace coughnet {
namespace {

Signal tone(double hz, Eigen::Index n, int rate = 22050, double amp = 0.5) {
  Signal s;
  s.sample_rate = rate;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / rate);
  return s;
}

Signal noise(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, 0.3);
  Signal s;
  s.sample_rate = 22050;
  s.samples.resize(n);
  for (auto& v : s.samples) v = d(rng);
  return s;
}

double snr_db(const Signal& clean, const Signal& noisy) {
  return 20.0 * std::log10(dsp::rms(clean.samples) / dsp::rms(noisy.samples - clean.samples));
}

TEST(Noise, DisabledIsIdentity) {
  const Signal s = noise(1000, 1);
  EXPECT_EQ(add_gaussian_noise(s, kNoNoise, 5).samples, s.samples);
}

TEST(Noise, UnitRmsAtTwentyDbGivesNoiseRmsOneTenth) {
  Signal s = tone(300.0, 22050);
  s.samples /= dsp::rms(s.samples);
  const Signal n = add_gaussian_noise(s, 20.0, 9);
  EXPECT_NEAR(dsp::rms(n.samples - s.samples), 0.1, 1e-9);
  EXPECT_EQ(n.size(), s.size());
  EXPECT_EQ(n.sample_rate, s.sample_rate);
}

TEST(Noise, EmpiricalSnrWithinHalfDecibel) {
  for (double target : {15.0, 21.5, 30.0, 0.0, -5.0}) {
    const Signal s = noise(5000, 2);
    EXPECT_NEAR(snr_db(s, add_gaussian_noise(s, target, 4)), target, 0.5);
  }
}

TEST(Noise, SeededAndZeroRmsIsDegenerate) {
  const Signal s = noise(500, 3);
  EXPECT_EQ(add_gaussian_noise(s, 20, 8).samples, add_gaussian_noise(s, 20, 8).samples);
  EXPECT_NE(add_gaussian_noise(s, 20, 8).samples, add_gaussian_noise(s, 20, 9).samples);
  Signal z;
  z.sample_rate = 22050;
  z.samples = Eigen::VectorXd::Zero(100);
  try {
    add_gaussian_noise(z, 20, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
  }
}

TEST(Pitch, ZeroSemitonesIsNearIdentity) {
  const Signal s = tone(440.0, 22050);
  const Signal p = pitch_shift(s, 0.0);
  ASSERT_EQ(p.size(), s.size());
  EXPECT_LT((p.samples - s.samples).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Pitch, OctaveUpMovesPeakTo880) {
  const Signal p = pitch_shift(tone(440.0, 22050), 12.0);
  EXPECT_EQ(p.size(), 22050);
  EXPECT_NEAR(dsp::peak_frequency(p.samples, p.sample_rate), 880.0, dsp::bin_width(p.size(), 22050));
}

TEST(Pitch, LengthPreservedAndPeakMovesForSmallShifts) {
  for (double st : {2.0, -2.0, 3.5}) {
    const Signal p = pitch_shift(tone(440.0, 22050), st);
    EXPECT_EQ(p.size(), 22050);
    EXPECT_EQ(p.sample_rate, 22050);
    EXPECT_NEAR(dsp::peak_frequency(p.samples, 22050), 440.0 * std::pow(2.0, st / 12.0), 1.0 + 1e-9);
  }
  const Signal odd = pitch_shift(noise(12345, 5), 2.0);
  EXPECT_EQ(odd.size(), 12345);
}

TEST(Pitch, OutOfRangeIsParameterError) {
  try {
    pitch_shift(tone(440.0, 1000), 13.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parameter);
  }
}

TEST(Shift, ZeroIsIdentityAndInverse) {
  const Signal s = noise(1001, 6);
  EXPECT_EQ(time_shift(s, 0.0).samples, s.samples);
  EXPECT_EQ(time_shift(time_shift(s, 0.2), -0.2).samples, s.samples);
}

TEST(Shift, PreservesSampleMultiset) {
  const Signal s = noise(777, 7);
  for (double f : {0.25, -0.25, 0.13, -0.01}) {
    const Signal t = time_shift(s, f);
    std::vector<double> a(s.samples.begin(), s.samples.end()), b(t.samples.begin(), t.samples.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
  EXPECT_THROW(time_shift(s, 0.3), Error);
}

TEST(Stretch, LengthRatio) {
  const Signal s = noise(22050, 8);
  EXPECT_EQ(time_stretch(s, 1.0).size(), 22050);
  EXPECT_NEAR(time_stretch(s, 1.25).size(), 17640, 0.02 * 17640);
  for (double r : {0.8, 0.85, 1.15}) {
    EXPECT_NEAR(static_cast<double>(time_stretch(s, r).size()) / (22050.0 / r), 1.0, 0.02);
  }
  EXPECT_THROW(time_stretch(s, 1.3), Error);
}

TEST(Stretch, PitchPreserved) {
  const Signal t = time_stretch(tone(440.0, 22050), 0.9);
  EXPECT_NEAR(dsp::peak_frequency(t.samples, 22050), 440.0, dsp::bin_width(t.size(), 22050));
}

RecordSet originals(int per_class1, int per_class2, int per_class3, Split split) {
  RecordSet rs;
  const std::array<int, 3> n = {per_class1, per_class2, per_class3};
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < n[k]; ++i) {
      Record r;
      r.id = "c" + std::to_string(k) + "_" + std::to_string(i);
      r.label = class_from_index(k);
      r.split = split;
      r.age = 30 + i % 40;
      rs.push_back(r);
    }
  }
  return rs;
}

std::array<std::pair<int, int>, 3> tally(const RecordSet& rs) {
  std::array<std::pair<int, int>, 3> t{};
  for (const Record& r : rs) {
    auto& c = t[class_index(*r.label)];
    ++c.first;
    if (r.is_original()) ++c.second;
  }
  return t;
}

TEST(Balance, TrainTargetsFromTheSplitTable) {
  const RecordSet in = originals(3556, 738, 304, Split::train);
  const RecordSet out = balance_with_augmentation(in, 600, 7);
  const auto t = tally(out);
  EXPECT_EQ(t[0], std::make_pair(600, 600));
  EXPECT_EQ(t[1], std::make_pair(600, 600));
  EXPECT_EQ(t[2], std::make_pair(600, 304));
}

TEST(Balance, ChildrenInheritSplitLabelAndMetadata) {
  const RecordSet in = originals(10, 10, 4, Split::val);
  const RecordSet out = balance_with_augmentation(in, 10, 3);
  std::map<std::string, const Record*> by_id;
  for (const Record& r : in) by_id[r.id] = &r;
  int children = 0;
  std::map<std::string, int> per_parent;
  for (const Record& r : out) {
    EXPECT_EQ(r.split, Split::val);
    if (r.is_original()) continue;
    ++children;
    const Record& p = *by_id.at(*r.parent_id);
    EXPECT_EQ(r.label, p.label);
    EXPECT_EQ(r.age, p.age);
    ASSERT_TRUE(r.augmentation.has_value());
    EXPECT_NO_THROW(validate_augment_spec(*r.augmentation));
    ++per_parent[p.id];
  }
  EXPECT_EQ(children, 6);
  // Round-robin over four parents: 2, 2, 1, 1.
  EXPECT_EQ(per_parent.at("c2_0"), 2);
  EXPECT_EQ(per_parent.at("c2_3"), 1);
  EXPECT_NO_THROW(validate_record_set(out));
}

TEST(Balance, EqualTargetIsIdentitySelection) {
  const RecordSet in = originals(5, 5, 5, Split::test);
  const RecordSet out = balance_with_augmentation(in, 5, 1);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out[i].id, in[i].id);
}

TEST(Balance, DeterministicAndSeedSensitive) {
  const RecordSet in = originals(30, 12, 5, Split::train);
  const RecordSet a = balance_with_augmentation(in, 20, 5), b = balance_with_augmentation(in, 20, 5),
                  c = balance_with_augmentation(in, 20, 6);
  std::vector<std::string> ia, ib, ic;
  for (const auto& r : a) ia.push_back(r.id + (r.augmentation ? std::to_string(r.augmentation->seed) : ""));
  for (const auto& r : b) ib.push_back(r.id + (r.augmentation ? std::to_string(r.augmentation->seed) : ""));
  for (const auto& r : c) ic.push_back(r.id + (r.augmentation ? std::to_string(r.augmentation->seed) : ""));
  EXPECT_EQ(ia, ib);
  EXPECT_NE(ia, ic);
}

TEST(Balance, MagnitudesFollowTheRanges) {
  AugmentRanges ranges;
  const RecordSet out = balance_with_augmentation(originals(2, 2, 2, Split::train), 200, 11, ranges);
  for (const Record& r : out) {
    if (!r.augmentation) continue;
    const double m = r.augmentation->magnitude;
    switch (r.augmentation->kind) {
      case AugmentKind::gaussian_noise:
        EXPECT_TRUE(m >= 15.0 && m <= 30.0);
        break;
      case AugmentKind::pitch_shift:
        EXPECT_TRUE(m >= -2.0 && m <= 2.0);
        break;
      case AugmentKind::time_shift:
        EXPECT_TRUE(m >= -0.2 && m <= 0.2);
        break;
      case AugmentKind::time_stretch:
        EXPECT_TRUE(m >= 0.85 && m <= 1.15);
        break;
    }
  }
}

TEST(Balance, Errors) {
  RecordSet in = originals(3, 3, 0, Split::train);
  try {
    balance_with_augmentation(in, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cannot_balance);
    EXPECT_NE(std::string(e.what()).find("class3"), std::string::npos);
  }
  in = originals(3, 3, 3, Split::train);
  in[0].split = Split::val;
  EXPECT_THROW(balance_with_augmentation(in, 3, 1), Error);
  in = originals(3, 3, 3, Split::train);
  in[1].split.reset();
  EXPECT_THROW(balance_with_augmentation(in, 3, 1), Error);
}

TEST(ApplyAugment, DispatchesAndValidates) {
  const Signal s = noise(4000, 12);
  EXPECT_EQ(apply_augment(s, {AugmentKind::time_shift, 0.1, 0}).samples, time_shift(s, 0.1).samples);
  EXPECT_EQ(apply_augment(s, {AugmentKind::gaussian_noise, 20.0, 4}).samples,
            add_gaussian_noise(s, 20.0, 4).samples);
  EXPECT_THROW(apply_augment(s, {AugmentKind::time_stretch, 2.0, 0}), Error);
}

}  // namespace
}  // namespace coughnet

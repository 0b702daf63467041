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
#include <filesystem>
#include <numbers>
#include <thread>

#include "coughnet/colormap.hpp"
#include "coughnet/dsp.hpp"
#include "coughnet/features.hpp"
#include "coughnet/oracles.hpp"

namespace coughnet {
namespace {

constexpr double kPi = std::numbers::pi;

Signal random_signal(Eigen::Index n, std::uint64_t seed, int rate = 22050) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, 0.2);
  Signal s;
  s.sample_rate = rate;
  s.samples.resize(n);
  for (auto& v : s.samples) v = d(rng);
  return s;
}

Signal tone(double hz, Eigen::Index n, int rate = 22050, double amp = 0.5) {
  Signal s;
  s.sample_rate = rate;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] = amp * std::sin(2.0 * kPi * hz * i / rate);
  return s;
}

TEST(Mel, ScaleValues) {
  EXPECT_DOUBLE_EQ(hz_to_mel(0.0), 0.0);
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-12);
  EXPECT_NEAR(hz_to_mel(700.0), 781.17, 0.01);
  for (double f : {10.0, 440.0, 8000.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(f)), f, 1e-9);
}

TEST(Power, ZeroSignalIsZero) {
  Signal z;
  z.sample_rate = 22050;
  z.samples = Eigen::VectorXd::Zero(4000);
  const Eigen::MatrixXd p = power_spectrogram(z, 512, 128);
  EXPECT_EQ(p.rows(), 257);
  EXPECT_EQ(p.cols(), 1 + 4000 / 128);
  EXPECT_TRUE(p.isZero(0.0));
}

TEST(Power, ImpulseAtFrameCenterIsFlat) {
  Signal s;
  s.sample_rate = 22050;
  s.samples = Eigen::VectorXd::Zero(2048);
  s.samples[1024] = 1.0;
  // Frame 2 starts at padded sample 1024; the impulse (padded 1536) hits
  // window index 512, where the periodic Hann is 1.
  const Eigen::MatrixXd p = power_spectrogram(s, 1024, 512);
  const Eigen::VectorXd col = p.col(2);
  EXPECT_NEAR(col.minCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(col.maxCoeff(), 1.0, 1e-12);
}

TEST(Power, ParsevalAgainstWindowedFrameEnergy) {
  const Signal s = random_signal(3000, 2);
  const int n_fft = 256, hop = 64;
  const Eigen::MatrixXd p = power_spectrogram(s, n_fft, hop);
  const Eigen::VectorXd padded = dsp::reflect_pad(s.samples, n_fft / 2);
  const Eigen::VectorXd w = dsp::hann_window(n_fft);
  for (Eigen::Index t : {0L, 5L, 20L, p.cols() - 1}) {
    const double energy = (padded.segment(t * hop, n_fft).array() * w.array()).square().sum();
    double two_sided = p(0, t) + p(n_fft / 2, t);
    for (int k = 1; k < n_fft / 2; ++k) two_sided += 2.0 * p(k, t);
    EXPECT_NEAR(two_sided / n_fft, energy, 1e-9 * std::max(1.0, energy));
  }
}

double triangle(double f, double lo, double c, double hi) {
  if (f <= lo || f >= hi) return 0.0;
  return f <= c ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
}

TEST(Filterbank, MatchesBruteForceTriangles) {
  const int n_mels = 40, n_fft = 1024, sr = 22050;
  const Eigen::MatrixXd fb = mel_filterbank(n_mels, n_fft, sr, 0.0, sr / 2.0);
  ASSERT_EQ(fb.rows(), n_mels);
  ASSERT_EQ(fb.cols(), n_fft / 2 + 1);
  const double mhi = hz_to_mel(sr / 2.0);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = mel_to_hz(mhi * m / (n_mels + 1)), c = mel_to_hz(mhi * (m + 1) / (n_mels + 1)),
                 hi = mel_to_hz(mhi * (m + 2) / (n_mels + 1));
    EXPECT_GT(fb.row(m).sum(), 0.0);
    Eigen::Index arg;
    fb.row(m).maxCoeff(&arg);
    EXPECT_LE(std::abs(static_cast<double>(arg) * sr / n_fft - c), static_cast<double>(sr) / n_fft);
    for (int k = 0; k <= n_fft / 2; ++k) {
      EXPECT_NEAR(fb(m, k), triangle(static_cast<double>(k) * sr / n_fft, lo, c, hi), 1e-12);
    }
  }
}

TEST(Filterbank, EmptyFilterIsConfigurationError) {
  try {
    mel_filterbank(128, 64, 22050, 0.0, 11025.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
  }
}

TEST(MelSpec, ZeroSignalSitsOnTheFloor) {
  Signal z;
  z.sample_rate = 22050;
  z.samples = Eigen::VectorXd::Zero(5000);
  const MelSpectrogram m = mel_spectrogram(z, FeatureConfig{});
  EXPECT_EQ(m.n_mels, 128);
  EXPECT_TRUE((m.values.array() == -100.0).all());
}

TEST(MelSpec, ToneAtFilterCenterWinsItsRow) {
  FeatureConfig fc;
  const Eigen::VectorXd centers = mel_center_frequencies(fc.n_mels, 0.0, 11025.0);
  for (int row : {20, 60, 100}) {
    const MelSpectrogram m = mel_spectrogram(tone(centers[row], 11025), fc);
    Eigen::Index arg;
    m.values.rowwise().mean().maxCoeff(&arg);
    EXPECT_EQ(arg, row);
  }
}

TEST(MelSpec, DoublingAmplitudeAddsSixDecibels) {
  const FeatureConfig fc;
  Signal a = random_signal(6000, 3);
  Signal b = a;
  b.samples *= 2.0;
  const Eigen::MatrixXd d = mel_spectrogram(b, fc).values - mel_spectrogram(a, fc).values;
  EXPECT_NEAR(d.minCoeff(), 20.0 * std::log10(2.0), 1e-6);
  EXPECT_NEAR(d.maxCoeff(), 20.0 * std::log10(2.0), 1e-6);
}

TEST(Mfcc, ConstantMelGivesScaledCoeffZero) {
  MelSpectrogram m;
  m.n_mels = 128;
  m.values = Eigen::MatrixXd::Constant(128, 7, -42.5);
  const MfccVector v = mfcc(m);
  EXPECT_NEAR(v[0], -42.5 * std::sqrt(128.0), 1e-9);
  EXPECT_LT(v.tail(12).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mfcc, DctMatchesBruteForceSum) {
  Rng rng(4);
  std::normal_distribution<double> d(-30.0, 15.0);
  MelSpectrogram m;
  m.n_mels = 64;
  m.values.resize(64, 1);
  for (auto& x : m.values.reshaped()) x = d(rng);
  const MfccVector v = mfcc(m);
  for (int c = 0; c < 13; ++c) {
    double s = 0.0;
    for (int n = 0; n < 64; ++n) s += m.values(n, 0) * std::cos(kPi * c * (n + 0.5) / 64);
    s *= std::sqrt((c == 0 ? 1.0 : 2.0) / 64);
    EXPECT_NEAR(v[c], s, 1e-9);
  }
  const Eigen::MatrixXd D = dct2_matrix(13, 64);
  EXPECT_TRUE((D * D.transpose()).isIdentity(1e-12));
}

TEST(Mfcc, FrameAveraging) {
  MelSpectrogram one;
  one.n_mels = 20;
  one.values = Eigen::VectorXd::LinSpaced(20, -80.0, -10.0);
  MelSpectrogram two = one;
  two.values = one.values.replicate(1, 2);
  EXPECT_TRUE(mfcc(one).isApprox(mfcc(two), 1e-14));
  one.n_mels = 12;
  one.values.conservativeResize(12, 1);
  EXPECT_THROW(mfcc(one), Error);
}

TEST(Mfcc, PipelineMatchesNaiveComposition) {
  const FeatureConfig fc;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Signal s = random_signal(3000 + 500 * static_cast<Eigen::Index>(seed), 100 + seed);
    const MfccVector got = mfcc(mel_spectrogram(s, fc));
    const auto want = oracle::naive_mfcc(s.samples, s.sample_rate, fc.n_fft, fc.hop, fc.n_mels,
                                         fc.fmin, s.sample_rate / 2.0, fc.power_floor);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Heatmap, ShapeAndRange) {
  const MelSpectrogram m = mel_spectrogram(random_signal(8000, 5), FeatureConfig{});
  const HeatmapImage h = render_heatmap(m, 24, 40);
  EXPECT_EQ(h.height, 24);
  EXPECT_EQ(h.width, 40);
  EXPECT_EQ(h.pixels.size(), 24 * 40 * 3);
  EXPECT_GE(h.pixels.minCoeff(), 0.0f);
  EXPECT_LE(h.pixels.maxCoeff(), 1.0f);
  EXPECT_EQ((render_heatmap(m, 24, 40).pixels == h.pixels).all(), true);
  EXPECT_THROW(render_heatmap(m, 7, 40), Error);
}

TEST(Heatmap, ConstantInputIsLutMidpoint) {
  MelSpectrogram m;
  m.n_mels = 16;
  m.values = Eigen::MatrixXd::Constant(16, 9, -3.0);
  const HeatmapImage h = render_heatmap(m, 8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(h.at(y, x, c), kHeatmapLut[128][c] / 255.0f);
    }
  }
}

TEST(Heatmap, IndicesOrderLikeTheDecibels) {
  MelSpectrogram m;
  m.n_mels = 12;
  Rng rng(6);
  std::uniform_real_distribution<double> u(-100.0, 0.0);
  m.values.resize(12, 10);
  for (auto& v : m.values.reshaped()) v = u(rng);
  const HeatmapIndices idx = heatmap_indices(m, 12, 10);
  // Same size: each pixel is one cell, flipped so the top row is the highest band.
  for (int a = 0; a < 120; ++a) {
    for (int b = 0; b < 120; ++b) {
      const int ra = a / 10, ca = a % 10, rb = b / 10, cb = b % 10;
      if (m.values(ra, ca) > m.values(rb, cb)) {
        EXPECT_GE(idx(11 - ra, ca), idx(11 - rb, cb));
      }
    }
  }
  EXPECT_EQ(idx.maxCoeff(), 255);
  EXPECT_EQ(idx.minCoeff(), 0);
}

TEST(Colormap, LuminanceNonDecreasing) {
  double prev = -1.0;
  for (const auto& rgb : kHeatmapLut) {
    const double l = 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2];
    EXPECT_GE(l, prev - 1e-9);
    prev = l;
  }
}

Record labeled_record(const std::string& id) {
  Record r;
  r.id = id;
  r.label = ClassLabel::symptomatic_negative;
  r.split = Split::val;
  r.symptoms = {{"fever", true}, {"fatigue", true}};
  return r;
}

std::vector<Chunk> chunks_of(const Signal& s, int count) {
  std::vector<Chunk> out;
  const Eigen::Index len = s.size() / count;
  for (int i = 0; i < count; ++i) {
    Chunk c;
    c.signal.sample_rate = s.sample_rate;
    c.signal.samples = s.samples.segment(i * len, len);
    c.index = i;
    out.push_back(c);
  }
  return out;
}

FeatureConfig small_config() {
  FeatureConfig fc;
  fc.image_size = 16;
  return fc;
}

TEST(Featurize, OneTriplePerChunkWithCopiedLabels) {
  const Record r = labeled_record("rec1");
  const auto ts = featurize_record(r, chunks_of(random_signal(9000, 7), 3),
                                   ClinicalSchema::default_schema(), small_config());
  ASSERT_EQ(ts.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(ts[i].chunk_index, i);
    EXPECT_EQ(ts[i].record_id, "rec1");
    EXPECT_EQ(ts[i].key(), "rec1#" + std::to_string(i));
    EXPECT_EQ(ts[i].label, ClassLabel::symptomatic_negative);
    EXPECT_EQ(ts[i].split, Split::val);
    EXPECT_EQ(ts[i].heatmap.height, 16);
    EXPECT_EQ(ts[i].clinical.bits, encode_clinical(r, ClinicalSchema::default_schema()).bits);
  }
  EXPECT_THROW(featurize_record(r, {}, ClinicalSchema::default_schema(), small_config()), Error);
}

bool same_triple(const FeatureTriple& a, const FeatureTriple& b) {
  return a.record_id == b.record_id && a.chunk_index == b.chunk_index && a.label == b.label &&
         a.split == b.split && a.heatmap.height == b.heatmap.height &&
         a.heatmap.width == b.heatmap.width && (a.heatmap.pixels == b.heatmap.pixels).all() &&
         a.mfcc == b.mfcc && a.clinical.bits == b.clinical.bits;
}

std::vector<FeatureTriple> many_triples(int records) {
  std::vector<FeatureTriple> out;
  for (int r = 0; r < records; ++r) {
    const auto ts = featurize_record(labeled_record("r" + std::to_string(r)),
                                     chunks_of(random_signal(4096, 50 + r), 2),
                                     ClinicalSchema::default_schema(), small_config());
    out.insert(out.end(), ts.begin(), ts.end());
  }
  return out;
}

TEST(Store, PutGetIsBitExact) {
  const auto ts = many_triples(2);
  FeatureStore store;
  for (const auto& t : ts) store.put(t);
  EXPECT_EQ(store.size(), 4u);
  for (const auto& t : ts) EXPECT_TRUE(same_triple(store.get(t.key()), t));
  try {
    store.put(ts[0]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conflict);
  }
  try {
    store.get("nope#0");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_found);
  }
}

TEST(Store, SerializeAndFileRoundTrip) {
  const auto ts = many_triples(3);
  FeatureStore store;
  for (const auto& t : ts) store.put(t);
  const auto bytes = store.serialize();
  const FeatureStore back = FeatureStore::deserialize(bytes);
  EXPECT_EQ(back.digest(), store.digest());
  for (const auto& t : ts) EXPECT_TRUE(same_triple(back.get(t.key()), t));

  const auto path = std::filesystem::temp_directory_path() / "coughnet_store_test.store";
  store.save(path.string());
  const FeatureStore loaded = FeatureStore::load(path.string());
  EXPECT_EQ(loaded.keys(), store.keys());
  EXPECT_EQ(loaded.digest(), store.digest());
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".keys");

  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2));
  EXPECT_THROW(FeatureStore::deserialize(cut), Error);
}

TEST(Store, ParallelWritersMatchSequential) {
  const auto ts = many_triples(6);
  FeatureStore sequential, parallel;
  for (const auto& t : ts) sequential.put(t);
  std::thread a([&] {
    for (std::size_t i = 0; i < ts.size(); i += 2) parallel.put(ts[i]);
  });
  std::thread b([&] {
    for (std::size_t i = ts.size(); i-- > 0;) {
      if (i % 2 == 1) parallel.put(ts[i]);
    }
  });
  a.join();
  b.join();
  EXPECT_EQ(parallel.digest(), sequential.digest());
}

}  // namespace
}  // namespace coughnet

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

#ifndef COUGHNET_FEATURES_HPP_
#define COUGHNET_FEATURES_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <mutex>
#include <string>
#include <vector>

#include "coughnet/audio.hpp"
#include "coughnet/ingest.hpp"
#include "coughnet/types.hpp"

namespace coughnet {

inline constexpr int kNumMfcc = 13;

struct FeatureConfig {
  int n_fft = 2048;
  int hop = 512;
  int n_mels = 128;
  double fmin = 0.0;
  /// 0 means sample_rate / 2.
  double fmax = 0.0;
  double power_floor = 1e-10;
  int image_size = 224;
};

/// Log-power mel matrix, rows are mel bands (low to high), columns frames.
struct MelSpectrogram {
  Eigen::MatrixXd values;
  int n_mels = 0;
  int frame_hop = 0;
  int sample_rate = 0;
};

using MfccVector = Eigen::Matrix<double, kNumMfcc, 1>;

/// Row-major H x W x 3 pixels in [0, 1]. Row 0 is the highest mel band.
struct HeatmapImage {
  int height = 0;
  int width = 0;
  Eigen::ArrayXf pixels;

  float at(int y, int x, int c) const { return pixels[(y * width + x) * 3 + c]; }
};

/// LUT indices before color mapping, same orientation as HeatmapImage.
using HeatmapIndices = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureTriple {
  std::string record_id;
  int chunk_index = 0;
  ClassLabel label = ClassLabel::asymptomatic_negative;
  Split split = Split::train;
  HeatmapImage heatmap;
  MfccVector mfcc = MfccVector::Zero();
  ClinicalVector clinical;

  std::string key() const;
};

/// HTK mel scale: 2595 log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// |STFT|^2, [n_fft/2 + 1] x frames.
Eigen::MatrixXd power_spectrogram(const Signal& signal, int n_fft, int hop);

/// Triangular filters, unit peak, centers equally spaced in mel.
/// Throws Error(configuration) when any filter covers no FFT bin.
Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin,
                               double fmax);

/// Center frequency (Hz) of each filter, n_mels entries.
Eigen::VectorXd mel_center_frequencies(int n_mels, double fmin, double fmax);

MelSpectrogram mel_spectrogram(const Signal& signal, const FeatureConfig& config);

/// Orthonormal DCT-II basis, rows are coefficients: [n_out x n_in].
Eigen::MatrixXd dct2_matrix(int n_out, int n_in);

/// Frame-averaged first 13 orthonormal DCT-II coefficients of the dB columns.
MfccVector mfcc(const MelSpectrogram& mel);

/// Min-max normalization, vertical flip, bilinear resize, 8-bit quantization.
HeatmapIndices heatmap_indices(const MelSpectrogram& mel, int height, int width);
HeatmapImage render_heatmap(const MelSpectrogram& mel, int height, int width);

/// Mel -> (heatmap, MFCC) per chunk, clinical vector shared across chunks.
std::vector<FeatureTriple> featurize_record(const Record& record,
                                            const std::vector<Chunk>& chunks,
                                            const ClinicalSchema& schema,
                                            const FeatureConfig& config);

/// Keyed container of FeatureTriples. put/get are thread safe; duplicate
/// keys are rejected with Error(conflict).
class FeatureStore {
 public:
  FeatureStore() = default;
  FeatureStore(FeatureStore&& other) noexcept;
  FeatureStore& operator=(FeatureStore&& other) noexcept;

  void put(FeatureTriple triple);
  FeatureTriple get(const std::string& key) const;
  bool contains(const std::string& key) const;
  std::size_t size() const;
  /// Sorted keys.
  std::vector<std::string> keys() const;
  /// All triples in key order.
  std::vector<FeatureTriple> values() const;

  /// Canonical serialization (sorted by key); see docs/FORMATS.md.
  std::vector<std::uint8_t> serialize() const;
  static FeatureStore deserialize(std::span<const std::uint8_t> bytes);
  std::string digest() const;

  /// Writes the store file and a `<path>.keys` manifest with one key per line.
  void save(const std::string& path) const;
  static FeatureStore load(const std::string& path);

 private:
  mutable std::mutex mutex_;
  std::map<std::string, FeatureTriple> entries_;
};

}  // namespace coughnet

#endif  // COUGHNET_FEATURES_HPP_

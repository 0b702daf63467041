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

#ifndef COUGHNET_AUDIO_HPP_
#define COUGHNET_AUDIO_HPP_

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coughnet/types.hpp"

namespace coughnet {

/// Mono PCM in [-1, 1] (augmented signals may exceed the range slightly).
struct Signal {
  Eigen::VectorXd samples;
  int sample_rate = 0;

  Eigen::Index size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

struct Chunk {
  Signal signal;
  std::string source_record;
  int index = 0;
};

enum class WavEncoding { pcm16, float32 };

/// Parses a RIFF/WAVE buffer: 16-bit PCM or 32-bit IEEE float, any channel
/// count (averaged to mono).
Signal decode_wav(std::span<const std::uint8_t> bytes);
Signal read_wav(const std::string& path);

std::vector<std::uint8_t> encode_wav(const Signal& signal, WavEncoding encoding);
void write_wav(const std::string& path, const Signal& signal, WavEncoding encoding);

/// Band-limited (windowed-sinc) resampling to an arbitrary rate.
Signal resample(const Signal& signal, int target_rate);

/// 63-tap Blackman windowed-sinc low-pass with cutoff 0.45 x output rate,
/// then decimation by two. Odd input rates are first resampled to 44100 Hz.
Signal downsample_half(const Signal& signal);

/// The anti-alias taps used by downsample_half (unit DC gain).
Eigen::VectorXd half_band_taps();

/// Fixed-length chunks. A trailing remainder of at least half a chunk is
/// zero-padded, shorter remainders are dropped, and a signal shorter than a
/// chunk yields a single padded chunk.
std::vector<Chunk> chunk(const Signal& signal, std::string_view record_id,
                         double chunk_seconds, double hop_seconds);

/// Knobs for the synthetic cough generator.
struct SynthParams {
  int sample_rate = 44100;
  double min_seconds = 2.0;
  double max_seconds = 8.0;
  /// Resonance center per class (class1, class2, class3).
  std::array<double, 3> center_hz = {400.0, 800.0, 1600.0};
  /// Per-recording uniform jitter of the center, as a fraction.
  double center_jitter = 0.08;
  double resonance_q = 4.0;
  /// Seconds between burst onsets, drawn uniformly.
  double min_gap = 0.35;
  double max_gap = 0.8;
  double decay_seconds = 0.12;
  /// Share of unfiltered noise inside a burst.
  double broadband = 0.1;
  double noise_floor = 0.005;
  /// Probability that a class1/class2 recording carries the other class's
  /// resonance (class3 never swaps). Splits the class signal between audio
  /// and clinical bits.
  double confusion = 0.0;
  double peak = 0.5;
};

/// Burst-envelope resonant noise; bit-identical for equal (label, seed).
Signal synth_cough(ClassLabel label, std::uint64_t seed, const SynthParams& params);

}  // namespace coughnet

#endif  // COUGHNET_AUDIO_HPP_

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

#include "coughnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include "coughnet/common.hpp"
#include "coughnet/dsp.hpp"

namespace coughnet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Index vocoder_fft_size(Eigen::Index n) {
  Eigen::Index n_fft = 2048;
  while (n_fft > 16 && n_fft / 2 >= n) n_fft /= 2;
  return n_fft;
}

double uniform_in(Rng& rng, std::pair<double, double> range) {
  return std::uniform_real_distribution<double>(range.first, range.second)(rng);
}

}  // namespace

Signal add_gaussian_noise(const Signal& signal, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return signal;
  const double signal_rms = dsp::rms(signal.samples);
  if (!(signal_rms > 0.0)) {
    throw Error(ErrorKind::degenerate, "cannot set an SNR against a zero-RMS signal");
  }
  Rng rng(derive_seed(seed, "gaussian_noise"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd noise(signal.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = gauss(rng);
  const double target_rms = signal_rms * std::pow(10.0, -snr_db / 20.0);
  noise *= target_rms / dsp::rms(noise);
  Signal out = signal;
  out.samples += noise;
  return out;
}

Signal phase_vocoder(const Signal& signal, double rate) {
  if (!(rate > 0.0)) throw Error(ErrorKind::parameter, "stretch rate must be positive");
  const Eigen::Index n = signal.size();
  if (n < 4) throw Error(ErrorKind::empty_input, "signal too short to stretch");
  const Eigen::Index n_fft = vocoder_fft_size(n);
  const Eigen::Index hop = n_fft / 4;
  const Eigen::MatrixXcd spec = dsp::stft(signal.samples, n_fft, hop);
  const Eigen::Index bins = spec.rows();
  const Eigen::Index frames = spec.cols();

  std::vector<double> steps;
  for (double t = 0.0; t < static_cast<double>(frames); t += rate) steps.push_back(t);

  Eigen::VectorXd advance(bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    advance[k] = kTwoPi * static_cast<double>(hop) * static_cast<double>(k) /
                 static_cast<double>(n_fft);
  }
  Eigen::VectorXd phase = spec.col(0).array().arg();
  Eigen::MatrixXcd out(bins, static_cast<Eigen::Index>(steps.size()));
  const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(bins);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto t0 = static_cast<Eigen::Index>(std::floor(steps[s]));
    const double alpha = steps[s] - static_cast<double>(t0);
    const Eigen::VectorXcd c0 = spec.col(t0);
    const Eigen::VectorXcd c1 = t0 + 1 < frames ? Eigen::VectorXcd(spec.col(t0 + 1)) : zero;
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double mag = (1.0 - alpha) * std::abs(c0[k]) + alpha * std::abs(c1[k]);
      out(k, static_cast<Eigen::Index>(s)) = std::polar(mag, phase[k]);
      double dphase = std::arg(c1[k]) - std::arg(c0[k]) - advance[k];
      dphase -= kTwoPi * std::round(dphase / kTwoPi);
      phase[k] += advance[k] + dphase;
    }
  }
  Signal result;
  result.sample_rate = signal.sample_rate;
  const auto length = static_cast<Eigen::Index>(std::llround(static_cast<double>(n) / rate));
  result.samples = dsp::istft(out, n_fft, hop, length);
  return result;
}

Signal pitch_shift(const Signal& signal, double semitones) {
  if (!(std::abs(semitones) <= 12.0)) {
    throw Error(ErrorKind::parameter, "pitch shift limited to +/-12 semitones");
  }
  if (semitones == 0.0) {
    // Still run the analysis/synthesis chain so the identity case exercises it.
    Signal out = phase_vocoder(signal, 1.0);
    out.samples.conservativeResize(signal.size());
    return out;
  }
  const double factor = std::pow(2.0, semitones / 12.0);
  Signal stretched = phase_vocoder(signal, 1.0 / factor);
  // Reinterpreting the stretched signal at rate sr*factor and resampling back
  // to sr scales every frequency by factor.
  const int rate = signal.sample_rate;
  stretched.sample_rate = static_cast<int>(std::lround(rate * factor));
  Signal shifted = resample(stretched, rate);
  const Eigen::Index n = signal.size();
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(n);
  const Eigen::Index keep = std::min(n, shifted.size());
  fixed.head(keep) = shifted.samples.head(keep);
  shifted.samples = std::move(fixed);
  shifted.sample_rate = rate;
  return shifted;
}

Signal time_shift(const Signal& signal, double shift_fraction) {
  if (!(std::abs(shift_fraction) <= 0.25)) {
    throw Error(ErrorKind::parameter, "time shift limited to +/-0.25 of the length");
  }
  const Eigen::Index n = signal.size();
  Signal out = signal;
  if (n == 0) return out;
  const auto k = static_cast<Eigen::Index>(std::llround(shift_fraction * static_cast<double>(n)));
  const Eigen::Index r = ((k % n) + n) % n;
  for (Eigen::Index i = 0; i < n; ++i) out.samples[(i + r) % n] = signal.samples[i];
  return out;
}

Signal time_stretch(const Signal& signal, double rate) {
  if (!(rate >= 0.8 && rate <= 1.25)) {
    throw Error(ErrorKind::parameter,
                "time stretch rate " + std::to_string(rate) + " outside [0.8, 1.25]");
  }
  return phase_vocoder(signal, rate);
}

void validate_augment_spec(const AugmentSpec& spec) {
  const double m = spec.magnitude;
  bool ok = true;
  switch (spec.kind) {
    case AugmentKind::gaussian_noise: ok = !std::isnan(m); break;
    case AugmentKind::pitch_shift: ok = std::abs(m) <= 12.0; break;
    case AugmentKind::time_shift: ok = std::abs(m) <= 0.25; break;
    case AugmentKind::time_stretch: ok = m >= 0.8 && m <= 1.25; break;
  }
  if (!ok) {
    throw Error(ErrorKind::parameter, "magnitude " + std::to_string(m) + " illegal for " +
                                          std::string(augment_kind_name(spec.kind)));
  }
}

Signal apply_augment(const Signal& signal, const AugmentSpec& spec) {
  validate_augment_spec(spec);
  switch (spec.kind) {
    case AugmentKind::gaussian_noise: return add_gaussian_noise(signal, spec.magnitude, spec.seed);
    case AugmentKind::pitch_shift: return pitch_shift(signal, spec.magnitude);
    case AugmentKind::time_shift: return time_shift(signal, spec.magnitude);
    case AugmentKind::time_stretch: return time_stretch(signal, spec.magnitude);
  }
  return signal;
}

RecordSet balance_with_augmentation(const RecordSet& split_records, int target_per_class,
                                    std::uint64_t seed, const AugmentRanges& ranges) {
  if (target_per_class <= 0) throw Error(ErrorKind::parameter, "target must be positive");
  std::optional<Split> split;
  for (const Record& r : split_records) {
    if (!r.split) throw Error(ErrorKind::parameter, "record " + r.id + " has no split");
    if (!r.label) throw Error(ErrorKind::parameter, "record " + r.id + " has no label");
    if (!r.is_original()) {
      throw Error(ErrorKind::parameter, "record " + r.id + " is already augmented");
    }
    if (split && *split != *r.split) {
      throw Error(ErrorKind::parameter, "balancing expects records from a single split");
    }
    split = r.split;
  }

  RecordSet out;
  for (ClassLabel label : kAllClasses) {
    std::vector<const Record*> originals;
    for (const Record& r : split_records) {
      if (*r.label == label) originals.push_back(&r);
    }
    if (originals.empty()) {
      throw Error(ErrorKind::cannot_balance,
                  std::string(class_name(label)) + " has no original records" +
                      (split ? " in " + std::string(split_name(*split)) : ""));
    }
    Rng rng(derive_seed(seed, split ? split_name(*split) : "none",
                        static_cast<std::uint64_t>(class_index(label))));
    const auto target = static_cast<std::size_t>(target_per_class);
    if (originals.size() >= target) {
      std::vector<std::size_t> idx(originals.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(target);
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) out.push_back(*originals[i]);
      continue;
    }
    for (const Record* r : originals) out.push_back(*r);
    std::uniform_int_distribution<int> pick_kind(0, 3);
    for (std::size_t c = 0; c < target - originals.size(); ++c) {
      const Record& parent = *originals[c % originals.size()];
      AugmentSpec spec;
      spec.kind = static_cast<AugmentKind>(pick_kind(rng));
      switch (spec.kind) {
        case AugmentKind::gaussian_noise: spec.magnitude = uniform_in(rng, ranges.snr_db); break;
        case AugmentKind::pitch_shift: spec.magnitude = uniform_in(rng, ranges.semitones); break;
        case AugmentKind::time_shift: spec.magnitude = uniform_in(rng, ranges.shift_fraction); break;
        case AugmentKind::time_stretch: spec.magnitude = uniform_in(rng, ranges.stretch_rate); break;
      }
      spec.seed = rng();
      Record child = parent;
      child.id = parent.id + "_aug" + std::to_string(c / originals.size());
      child.parent_id = parent.id;
      child.audio_path.clear();
      child.augmentation = spec;
      out.push_back(std::move(child));
    }
  }
  return out;
}

}  // namespace coughnet

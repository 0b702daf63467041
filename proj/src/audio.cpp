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

#include "coughnet/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "coughnet/common.hpp"
#include "coughnet/dsp.hpp"

namespace coughnet {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

template <typename T>
T load_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void store_le(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Signal decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorKind::unsupported_format, "not a RIFF/WAVE container");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::size_t size = load_le<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        throw Error(ErrorKind::corrupt_file, "truncated fmt chunk");
      }
      format = load_le<std::uint16_t>(bytes, body);
      channels = load_le<std::uint16_t>(bytes, body + 2);
      rate = load_le<std::uint32_t>(bytes, body + 4);
      bits = load_le<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible && size >= 26) {
        format = load_le<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorKind::corrupt_file, "data chunk before fmt chunk");
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32) {
        throw Error(ErrorKind::unsupported_format,
                    "unsupported WAV codec (format " + std::to_string(format) + ", " +
                        std::to_string(bits) + " bits)");
      }
      if (channels == 0 || rate == 0) {
        throw Error(ErrorKind::corrupt_file, "invalid channel count or sample rate");
      }
      if (body + size > bytes.size()) {
        throw Error(ErrorKind::corrupt_file,
                    "data chunk declares " + std::to_string(size) + " bytes, only " +
                        std::to_string(bytes.size() - body) + " present");
      }
      const std::size_t width = bits / 8;
      const std::size_t frames = size / (width * channels);
      Signal s;
      s.sample_rate = static_cast<int>(rate);
      s.samples.resize(static_cast<Eigen::Index>(frames));
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t off = body + (i * channels + c) * width;
          acc += pcm16 ? load_le<std::int16_t>(bytes, off) / 32768.0
                       : static_cast<double>(load_le<float>(bytes, off));
        }
        s.samples[static_cast<Eigen::Index>(i)] = acc / channels;
      }
      if (!s.samples.allFinite()) throw Error(ErrorKind::corrupt_file, "non-finite samples");
      return s;
    }
    pos = body + size + (size & 1);
  }
  throw Error(ErrorKind::corrupt_file, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

Signal read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const Signal& signal, WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(signal.samples.size()) * (bits / 8);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  store_le<std::uint32_t>(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  store_le<std::uint32_t>(out, 16);
  store_le<std::uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
  store_le<std::uint16_t>(out, 1);
  store_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate));
  store_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate) * (bits / 8));
  store_le<std::uint16_t>(out, bits / 8);
  store_le<std::uint16_t>(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  store_le<std::uint32_t>(out, data_size);
  for (Eigen::Index i = 0; i < signal.samples.size(); ++i) {
    if (pcm) {
      const double v = std::clamp(signal.samples[i], -1.0, 1.0) * 32768.0;
      store_le<std::int16_t>(
          out, static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L)));
    } else {
      store_le<float>(out, static_cast<float>(signal.samples[i]));
    }
  }
  return out;
}

void write_wav(const std::string& path, const Signal& signal, WavEncoding encoding) {
  const auto bytes = encode_wav(signal, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "short write to " + path);
}

Signal resample(const Signal& signal, int target_rate) {
  if (target_rate <= 0 || signal.sample_rate <= 0) {
    throw Error(ErrorKind::parameter, "sample rates must be positive");
  }
  if (target_rate == signal.sample_rate) return signal;
  const double ratio = static_cast<double>(target_rate) / signal.sample_rate;
  // Cutoff in cycles per input sample, slightly inside the lower Nyquist.
  const double cutoff = 0.5 * std::min(1.0, ratio) * 0.95;
  const double radius = 16.0 / (2.0 * cutoff);
  const Eigen::Index n_in = signal.size();
  const auto n_out = static_cast<Eigen::Index>(std::llround(n_in * ratio));
  Signal out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const double win_step = std::numbers::pi / radius;
  const double sinc_step = 2.0 * std::numbers::pi * cutoff;
  const double win_cos = std::cos(win_step), win_sin = std::sin(win_step);
  const double sinc_cos = std::cos(sinc_step), sinc_sin = std::sin(sinc_step);
  for (Eigen::Index j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) / ratio;
    const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(t - radius)));
    const auto hi = std::min<Eigen::Index>(n_in - 1, static_cast<Eigen::Index>(std::floor(t + radius)));
    // Windowed sinc over the taps. The window and numerator phases advance
    // by fixed angles per tap, so they follow angle-addition recurrences.
    double d = t - static_cast<double>(lo);
    double wc = std::cos(win_step * d), ws = std::sin(win_step * d);
    double sc = std::cos(sinc_step * d), ss = std::sin(sinc_step * d);
    double acc = 0.0;
    for (Eigen::Index k = lo; k <= hi; ++k, d -= 1.0) {
      const double w = 0.42 + 0.5 * wc + 0.08 * (2.0 * wc * wc - 1.0);
      const double kernel =
          std::abs(d) < 1e-12 ? 2.0 * cutoff : ss / (std::numbers::pi * d);
      acc += signal.samples[k] * kernel * w;
      const double wc1 = wc * win_cos + ws * win_sin;
      ws = ws * win_cos - wc * win_sin;
      wc = wc1;
      const double sc1 = sc * sinc_cos + ss * sinc_sin;
      ss = ss * sinc_cos - sc * sinc_sin;
      sc = sc1;
    }
    out.samples[j] = acc;
  }
  return out;
}

Eigen::VectorXd half_band_taps() {
  constexpr int kTaps = 63;
  constexpr double kCutoff = 0.45 * 0.5;  // 0.45 x output rate, in cycles per input sample
  const Eigen::VectorXd window = dsp::blackman_window(kTaps);
  Eigen::VectorXd h(kTaps);
  const int mid = kTaps / 2;
  for (int i = 0; i < kTaps; ++i) {
    h[i] = 2.0 * kCutoff * sinc(2.0 * kCutoff * (i - mid)) * window[i];
  }
  return h / h.sum();
}

Signal downsample_half(const Signal& signal) {
  if (signal.sample_rate % 2 != 0) {
    return downsample_half(resample(signal, 2 * 22050));
  }
  const Eigen::VectorXd h = half_band_taps();
  const Eigen::Index taps = h.size();
  const Eigen::Index mid = taps / 2;
  const Eigen::Index n = signal.size();
  Signal out;
  out.sample_rate = signal.sample_rate / 2;
  out.samples.resize((n + 1) / 2);
  for (Eigen::Index m = 0; m < out.samples.size(); ++m) {
    const Eigen::Index center = 2 * m;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < taps; ++k) {
      const Eigen::Index idx = center + mid - k;
      if (idx >= 0 && idx < n) acc += h[k] * signal.samples[idx];
    }
    out.samples[m] = acc;
  }
  return out;
}

std::vector<Chunk> chunk(const Signal& signal, std::string_view record_id,
                         double chunk_seconds, double hop_seconds) {
  if (!(chunk_seconds > 0.0) || !(hop_seconds > 0.0) || hop_seconds > chunk_seconds) {
    throw Error(ErrorKind::parameter, "require 0 < hop_seconds <= chunk_seconds");
  }
  const Eigen::Index n = signal.size();
  if (n == 0) throw Error(ErrorKind::empty_input, "cannot chunk an empty signal");
  const auto len = static_cast<Eigen::Index>(std::llround(chunk_seconds * signal.sample_rate));
  const auto hop = static_cast<Eigen::Index>(std::llround(hop_seconds * signal.sample_rate));
  if (len <= 0 || hop <= 0) throw Error(ErrorKind::parameter, "chunk shorter than one sample");

  std::vector<Chunk> out;
  auto emit = [&](Eigen::Index start) {
    Chunk c;
    c.source_record = std::string(record_id);
    c.index = static_cast<int>(out.size());
    c.signal.sample_rate = signal.sample_rate;
    c.signal.samples = Eigen::VectorXd::Zero(len);
    const Eigen::Index count = std::min(len, n - start);
    c.signal.samples.head(count) = signal.samples.segment(start, count);
    out.push_back(std::move(c));
  };

  Eigen::Index start = 0;
  Eigen::Index covered = 0;
  for (; start + len <= n; start += hop) {
    emit(start);
    covered = start + len;
  }
  if (out.empty()) {
    emit(0);
  } else if (covered < n && 2 * (n - start) >= len) {
    emit(start);
  }
  return out;
}

Signal synth_cough(ClassLabel label, std::uint64_t seed, const SynthParams& p) {
  Rng rng(derive_seed(seed, "synth_cough", static_cast<std::uint64_t>(class_index(label))));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double seconds = p.min_seconds + (p.max_seconds - p.min_seconds) * unit(rng);
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * p.sample_rate));

  int resonance_class = class_index(label);
  const bool swap = unit(rng) < p.confusion;
  if (swap && label != ClassLabel::covid_positive) resonance_class = 1 - resonance_class;
  const double center =
      p.center_hz[resonance_class] * (1.0 + p.center_jitter * (2.0 * unit(rng) - 1.0));

  // Constant-peak-gain band-pass biquad.
  const double w0 = 2.0 * std::numbers::pi * center / p.sample_rate;
  const double alpha = std::sin(w0) / (2.0 * p.resonance_q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;

  Signal s;
  s.sample_rate = p.sample_rate;
  s.samples = Eigen::VectorXd::Zero(n);
  const double resonant_gain = std::sqrt(p.resonance_q) * 2.0;

  double onset = 0.05 * unit(rng);
  while (onset < seconds) {
    const auto begin = static_cast<Eigen::Index>(onset * p.sample_rate);
    const double amplitude = 0.6 + 0.4 * unit(rng);
    const auto burst_len = std::min<Eigen::Index>(
        n - begin, static_cast<Eigen::Index>(6.0 * p.decay_seconds * p.sample_rate));
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (Eigen::Index i = 0; i < burst_len; ++i) {
      const double t = static_cast<double>(i) / p.sample_rate;
      const double envelope = std::min(1.0, t / 0.01) * std::exp(-t / p.decay_seconds);
      const double x = gauss(rng);
      const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = x;
      y2 = y1;
      y1 = y;
      s.samples[begin + i] +=
          amplitude * envelope * ((1.0 - p.broadband) * resonant_gain * y + p.broadband * x);
    }
    onset += p.min_gap + (p.max_gap - p.min_gap) * unit(rng);
  }
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] += p.noise_floor * gauss(rng);

  const double peak = s.samples.cwiseAbs().maxCoeff();
  if (peak > 0.0) s.samples *= p.peak / peak;
  return s;
}

}  // namespace coughnet

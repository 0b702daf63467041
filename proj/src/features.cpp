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

#include "coughnet/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "coughnet/colormap.hpp"
#include "coughnet/common.hpp"
#include "coughnet/dsp.hpp"

namespace coughnet {

std::string FeatureTriple::key() const {
  return record_id + "#" + std::to_string(chunk_index);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd power_spectrogram(const Signal& signal, int n_fft, int hop) {
  if (n_fft <= 0 || !std::has_single_bit(static_cast<unsigned>(n_fft))) {
    throw Error(ErrorKind::configuration, "n_fft must be a power of two");
  }
  if (hop <= 0 || hop > n_fft) throw Error(ErrorKind::configuration, "require 0 < hop <= n_fft");
  if (signal.size() <= n_fft / 2) {
    throw Error(ErrorKind::empty_input, "signal of " + std::to_string(signal.size()) +
                                            " samples is too short for n_fft " +
                                            std::to_string(n_fft));
  }
  return dsp::stft(signal.samples, n_fft, hop).cwiseAbs2();
}

Eigen::VectorXd mel_center_frequencies(int n_mels, double fmin, double fmax) {
  const Eigen::VectorXd mels =
      Eigen::VectorXd::LinSpaced(n_mels + 2, hz_to_mel(fmin), hz_to_mel(fmax));
  Eigen::VectorXd centers(n_mels);
  for (int m = 0; m < n_mels; ++m) centers[m] = mel_to_hz(mels[m + 1]);
  return centers;
}

Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin,
                               double fmax) {
  if (n_mels <= 0 || n_fft <= 0 || sample_rate <= 0) {
    throw Error(ErrorKind::configuration, "filterbank sizes must be positive");
  }
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw Error(ErrorKind::configuration, "require 0 <= fmin < fmax <= sample_rate/2");
  }
  const Eigen::VectorXd mels =
      Eigen::VectorXd::LinSpaced(n_mels + 2, hz_to_mel(fmin), hz_to_mel(fmax));
  Eigen::VectorXd edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mels[i]);

  const int bins = n_fft / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double rising = (f - lo) / (center - lo);
      const double falling = (hi - f) / (hi - center);
      fb(m, k) = std::max(0.0, std::min(rising, falling));
    }
    if (!(fb.row(m).sum() > 0.0)) {
      throw Error(ErrorKind::configuration,
                  "mel filter " + std::to_string(m) + " covers no FFT bin; reduce n_mels or raise n_fft");
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const Signal& signal, const FeatureConfig& config) {
  const double fmax = config.fmax > 0.0 ? config.fmax : signal.sample_rate / 2.0;
  const Eigen::MatrixXd fb =
      mel_filterbank(config.n_mels, config.n_fft, signal.sample_rate, config.fmin, fmax);
  const Eigen::MatrixXd power = power_spectrogram(signal, config.n_fft, config.hop);
  MelSpectrogram mel;
  mel.values = (fb * power)
                   .array()
                   .max(config.power_floor)
                   .log10()
                   .matrix() *
               10.0;
  mel.n_mels = config.n_mels;
  mel.frame_hop = config.hop;
  mel.sample_rate = signal.sample_rate;
  return mel;
}

Eigen::MatrixXd dct2_matrix(int n_out, int n_in) {
  Eigen::MatrixXd basis(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
    for (int n = 0; n < n_in; ++n) {
      basis(k, n) = scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return basis;
}

MfccVector mfcc(const MelSpectrogram& mel) {
  const auto n_mels = static_cast<int>(mel.values.rows());
  if (n_mels < kNumMfcc) {
    throw Error(ErrorKind::configuration, "need at least 13 mel bands for MFCCs");
  }
  if (mel.values.cols() == 0) throw Error(ErrorKind::empty_input, "mel spectrogram has no frames");
  const Eigen::MatrixXd coeffs = dct2_matrix(kNumMfcc, n_mels) * mel.values;
  return coeffs.rowwise().mean();
}

HeatmapIndices heatmap_indices(const MelSpectrogram& mel, int height, int width) {
  if (height < 8 || width < 8) throw Error(ErrorKind::parameter, "heatmap must be at least 8x8");
  const Eigen::MatrixXd& v = mel.values;
  const Eigen::Index in_h = v.rows(), in_w = v.cols();
  if (in_h == 0 || in_w == 0) throw Error(ErrorKind::empty_input, "empty mel spectrogram");

  const double lo = v.minCoeff(), hi = v.maxCoeff();
  Eigen::MatrixXd norm = hi > lo ? Eigen::MatrixXd((v.array() - lo) / (hi - lo))
                                 : Eigen::MatrixXd::Constant(in_h, in_w, 0.5);
  norm = norm.colwise().reverse().eval();

  auto source = [](int out_pos, int out_len, Eigen::Index in_len) {
    const double s = (out_pos + 0.5) * static_cast<double>(in_len) / out_len - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in_len - 1));
  };

  HeatmapIndices idx(height, width);
  for (int y = 0; y < height; ++y) {
    const double sy = source(y, height, in_h);
    const auto y0 = static_cast<Eigen::Index>(sy);
    const Eigen::Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = sy - static_cast<double>(y0);
    for (int x = 0; x < width; ++x) {
      const double sx = source(x, width, in_w);
      const auto x0 = static_cast<Eigen::Index>(sx);
      const Eigen::Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = sx - static_cast<double>(x0);
      const double value = (1 - wy) * ((1 - wx) * norm(y0, x0) + wx * norm(y0, x1)) +
                           wy * ((1 - wx) * norm(y1, x0) + wx * norm(y1, x1));
      idx(y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(value * 255.0), 0L, 255L));
    }
  }
  return idx;
}

HeatmapImage render_heatmap(const MelSpectrogram& mel, int height, int width) {
  const HeatmapIndices idx = heatmap_indices(mel, height, width);
  HeatmapImage img;
  img.height = height;
  img.width = width;
  img.pixels.resize(static_cast<Eigen::Index>(height) * width * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Rgb8& rgb = kHeatmapLut[idx(y, x)];
      for (int c = 0; c < 3; ++c) {
        img.pixels[(y * width + x) * 3 + c] = static_cast<float>(rgb[c]) / 255.0f;
      }
    }
  }
  return img;
}

std::vector<FeatureTriple> featurize_record(const Record& record,
                                            const std::vector<Chunk>& chunks,
                                            const ClinicalSchema& schema,
                                            const FeatureConfig& config) {
  if (chunks.empty()) throw Error(ErrorKind::empty_input, "record " + record.id + " has no chunks");
  if (!record.label || !record.split) {
    throw Error(ErrorKind::parameter, "record " + record.id + " needs a label and a split");
  }
  const ClinicalVector clinical = encode_clinical(record, schema);
  std::vector<FeatureTriple> out;
  out.reserve(chunks.size());
  for (const Chunk& c : chunks) {
    const MelSpectrogram mel = mel_spectrogram(c.signal, config);
    FeatureTriple t;
    t.record_id = record.id;
    t.chunk_index = c.index;
    t.label = *record.label;
    t.split = *record.split;
    t.heatmap = render_heatmap(mel, config.image_size, config.image_size);
    t.mfcc = mfcc(mel);
    t.clinical = clinical;
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// FeatureStore

FeatureStore::FeatureStore(FeatureStore&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  entries_ = std::move(other.entries_);
}

FeatureStore& FeatureStore::operator=(FeatureStore&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    entries_ = std::move(other.entries_);
  }
  return *this;
}

void FeatureStore::put(FeatureTriple triple) {
  std::string key = triple.key();
  std::lock_guard lock(mutex_);
  if (entries_.contains(key)) throw Error(ErrorKind::conflict, "duplicate feature key " + key);
  entries_.emplace(std::move(key), std::move(triple));
}

FeatureTriple FeatureStore::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorKind::not_found, "no feature entry " + key);
  return it->second;
}

bool FeatureStore::contains(const std::string& key) const {
  std::lock_guard lock(mutex_);
  return entries_.contains(key);
}

std::size_t FeatureStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<std::string> FeatureStore::keys() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::vector<FeatureTriple> FeatureStore::values() const {
  std::lock_guard lock(mutex_);
  std::vector<FeatureTriple> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(v);
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "feature store I/O assumes a little-endian host");

constexpr char kStoreMagic[4] = {'C', 'N', 'F', 'S'};
constexpr std::uint32_t kStoreVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    T value;
    get_raw(&value, sizeof(T));
    return value;
  }
  void get_raw(void* out, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorKind::corrupt_file, "feature store truncated");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    get_raw(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> FeatureStore::serialize() const {
  std::lock_guard lock(mutex_);
  Writer w;
  w.put_raw(kStoreMagic, 4);
  w.put<std::uint32_t>(kStoreVersion);
  w.put<std::uint64_t>(entries_.size());
  for (const auto& [key, t] : entries_) {
    w.put_string(key);
    w.put_string(t.record_id);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.chunk_index));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.label));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.split));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.heatmap.height));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.heatmap.width));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.heatmap.pixels.size() * sizeof(float)));
    w.put_raw(t.heatmap.pixels.data(), t.heatmap.pixels.size() * sizeof(float));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(kNumMfcc * sizeof(double)));
    w.put_raw(t.mfcc.data(), kNumMfcc * sizeof(double));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.clinical.bits.size()));
    w.put_raw(t.clinical.bits.data(), t.clinical.bits.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.clinical.schema.size()));
    for (const auto& name : t.clinical.schema) w.put_string(name);
  }
  return std::move(w.bytes);
}

FeatureStore FeatureStore::deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.get_raw(magic, 4);
  if (std::memcmp(magic, kStoreMagic, 4) != 0) {
    throw Error(ErrorKind::unsupported_format, "not a feature store");
  }
  if (r.get<std::uint32_t>() != kStoreVersion) {
    throw Error(ErrorKind::unsupported_format, "unsupported feature store version");
  }
  const auto count = r.get<std::uint64_t>();
  FeatureStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string key = r.get_string();
    FeatureTriple t;
    t.record_id = r.get_string();
    t.chunk_index = static_cast<int>(r.get<std::uint32_t>());
    const auto label = r.get<std::uint8_t>();
    const auto split = r.get<std::uint8_t>();
    if (label > 2 || split > 2) throw Error(ErrorKind::corrupt_file, "bad label/split byte");
    t.label = static_cast<ClassLabel>(label);
    t.split = static_cast<Split>(split);
    t.heatmap.height = static_cast<int>(r.get<std::uint32_t>());
    t.heatmap.width = static_cast<int>(r.get<std::uint32_t>());
    const auto heat_bytes = r.get<std::uint32_t>();
    if (heat_bytes != static_cast<std::uint64_t>(t.heatmap.height) * t.heatmap.width * 3 * sizeof(float)) {
      throw Error(ErrorKind::corrupt_file, "heatmap blob size mismatch for " + key);
    }
    t.heatmap.pixels.resize(heat_bytes / sizeof(float));
    r.get_raw(t.heatmap.pixels.data(), heat_bytes);
    if (r.get<std::uint32_t>() != kNumMfcc * sizeof(double)) {
      throw Error(ErrorKind::corrupt_file, "mfcc blob size mismatch for " + key);
    }
    r.get_raw(t.mfcc.data(), kNumMfcc * sizeof(double));
    t.clinical.bits.resize(r.get<std::uint32_t>());
    r.get_raw(t.clinical.bits.data(), t.clinical.bits.size());
    const auto schema_len = r.get<std::uint32_t>();
    for (std::uint32_t s = 0; s < schema_len; ++s) t.clinical.schema.push_back(r.get_string());
    if (t.key() != key) throw Error(ErrorKind::corrupt_file, "key mismatch for " + key);
    store.put(std::move(t));
  }
  if (!r.done()) throw Error(ErrorKind::corrupt_file, "trailing bytes in feature store");
  return store;
}

std::string FeatureStore::digest() const { return sha256_hex(serialize()); }

void FeatureStore::save(const std::string& path) const {
  const auto bytes = serialize();
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "short write to " + path);
  }
  std::ofstream manifest(path + ".keys", std::ios::binary);
  if (!manifest) throw Error(ErrorKind::io, "cannot write " + path + ".keys");
  for (const auto& k : keys()) manifest << k << '\n';
}

FeatureStore FeatureStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace coughnet

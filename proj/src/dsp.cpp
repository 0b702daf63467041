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

#include "coughnet/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "coughnet/common.hpp"

namespace coughnet::dsp {

Eigen::VectorXd hann_window(Index n) {
  Eigen::VectorXd w(n);
  for (Index i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

Eigen::VectorXd blackman_window(Index n) {
  Eigen::VectorXd w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (Index i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) /
                     static_cast<double>(n - 1);
    w[i] = 0.42 - 0.5 * std::cos(t) + 0.08 * std::cos(2.0 * t);
  }
  return w;
}

Eigen::VectorXcd rfft(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> in(x.data(), x.data() + x.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return Eigen::Map<Eigen::VectorXcd>(out.data(), x.size() / 2 + 1);
}

Eigen::VectorXd irfft(const Eigen::Ref<const Eigen::VectorXcd>& spectrum, Index n) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> in(spectrum.data(),
                                       spectrum.data() + spectrum.size());
  std::vector<double> out;
  fft.inv(out, in, n);
  return Eigen::Map<Eigen::VectorXd>(out.data(), n);
}

Eigen::VectorXd reflect_pad(const Eigen::Ref<const Eigen::VectorXd>& x, Index pad) {
  const Index n = x.size();
  if (pad >= n) {
    throw Error(ErrorKind::empty_input,
                "signal of " + std::to_string(n) + " samples too short for reflect padding of " +
                    std::to_string(pad));
  }
  Eigen::VectorXd out(n + 2 * pad);
  out.segment(pad, n) = x;
  for (Index i = 0; i < pad; ++i) {
    out[pad - 1 - i] = x[i + 1];
    out[pad + n + i] = x[n - 2 - i];
  }
  return out;
}

Eigen::MatrixXcd stft(const Eigen::Ref<const Eigen::VectorXd>& x, Index n_fft,
                      Index hop) {
  const Eigen::VectorXd padded = reflect_pad(x, n_fft / 2);
  if (padded.size() < n_fft) {
    throw Error(ErrorKind::empty_input, "signal shorter than one analysis frame");
  }
  const Index frames = 1 + (padded.size() - n_fft) / hop;
  const Eigen::VectorXd window = hann_window(n_fft);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  Eigen::MatrixXcd out(n_fft / 2 + 1, frames);
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spec;
  for (Index t = 0; t < frames; ++t) {
    Eigen::Map<Eigen::VectorXd>(frame.data(), n_fft) =
        padded.segment(t * hop, n_fft).cwiseProduct(window);
    fft.fwd(spec, frame);
    out.col(t) = Eigen::Map<Eigen::VectorXcd>(spec.data(), n_fft / 2 + 1);
  }
  return out;
}

Eigen::VectorXd istft(const Eigen::Ref<const Eigen::MatrixXcd>& frames, Index n_fft,
                      Index hop, Index length) {
  const Index pad = n_fft / 2;
  const Index n_frames = frames.cols();
  const Index full = n_fft + hop * (n_frames - 1);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(full);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(full);
  const Eigen::VectorXd window = hann_window(n_fft);
  const Eigen::VectorXd window_sq = window.cwiseAbs2();
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec(n_fft / 2 + 1);
  std::vector<double> time;
  for (Index t = 0; t < n_frames; ++t) {
    Eigen::Map<Eigen::VectorXcd>(spec.data(), n_fft / 2 + 1) = frames.col(t);
    fft.inv(time, spec, n_fft);
    acc.segment(t * hop, n_fft) +=
        Eigen::Map<const Eigen::VectorXd>(time.data(), n_fft).cwiseProduct(window);
    norm.segment(t * hop, n_fft) += window_sq;
  }
  constexpr double kTiny = 1e-10;
  for (Index i = 0; i < full; ++i) {
    if (norm[i] > kTiny) acc[i] /= norm[i];
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
  const Index available = std::max<Index>(0, full - pad);
  const Index n = std::min(length, available);
  if (n > 0) out.head(n) = acc.segment(pad, n);
  return out;
}

double peak_frequency(const Eigen::Ref<const Eigen::VectorXd>& x, int sample_rate) {
  const Eigen::VectorXcd spectrum = rfft(x);
  Index best = 1;
  for (Index k = 1; k < spectrum.size(); ++k) {
    if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
  }
  return static_cast<double>(best) * bin_width(x.size(), sample_rate);
}

double band_power(const Eigen::Ref<const Eigen::VectorXd>& x, int sample_rate,
                  double lo_hz, double hi_hz) {
  const Eigen::VectorXcd spectrum = rfft(x);
  const double df = bin_width(x.size(), sample_rate);
  double total = 0.0;
  for (Index k = 0; k < spectrum.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    if (f >= lo_hz && f < hi_hz) total += std::norm(spectrum[k]);
  }
  return total;
}

}  // namespace coughnet::dsp

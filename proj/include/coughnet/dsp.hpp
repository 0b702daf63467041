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

#ifndef COUGHNET_DSP_HPP_
#define COUGHNET_DSP_HPP_

#include <Eigen/Dense>

namespace coughnet::dsp {

using Eigen::Index;

/// Periodic Hann window (the FFT-analysis convention).
Eigen::VectorXd hann_window(Index n);

/// Blackman window sampled at n points over [0, n-1].
Eigen::VectorXd blackman_window(Index n);

/// One-sided spectrum, n/2 + 1 bins.
Eigen::VectorXcd rfft(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Inverse of rfft for a real signal of length n.
Eigen::VectorXd irfft(const Eigen::Ref<const Eigen::VectorXcd>& spectrum, Index n);

/// Mirror padding that excludes the edge sample (x[-1] = x[1]).
Eigen::VectorXd reflect_pad(const Eigen::Ref<const Eigen::VectorXd>& x, Index pad);

/// Centered short-time Fourier transform, [n_fft/2 + 1] x [1 + len/hop],
/// Hann analysis window and reflect padding of n_fft/2 on both sides.
Eigen::MatrixXcd stft(const Eigen::Ref<const Eigen::VectorXd>& x, Index n_fft,
                      Index hop);

/// Weighted overlap-add inverse of stft, trimmed or zero-extended to `length`.
Eigen::VectorXd istft(const Eigen::Ref<const Eigen::MatrixXcd>& frames,
                      Index n_fft, Index hop, Index length);

template <typename Derived>
double rms(const Eigen::MatrixBase<Derived>& x) {
  return x.size() == 0 ? 0.0 : std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

/// Frequency (Hz) of the largest-magnitude rfft bin of the whole signal,
/// excluding DC.
double peak_frequency(const Eigen::Ref<const Eigen::VectorXd>& x, int sample_rate);

/// Bin spacing (Hz) of a whole-signal rfft.
inline double bin_width(Index n, int sample_rate) {
  return static_cast<double>(sample_rate) / static_cast<double>(n);
}

/// Sum of |X_k|^2 over bins whose center lies in [lo_hz, hi_hz).
double band_power(const Eigen::Ref<const Eigen::VectorXd>& x, int sample_rate,
                  double lo_hz, double hi_hz);

}  // namespace coughnet::dsp

#endif  // COUGHNET_DSP_HPP_

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

#include "coughnet/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace coughnet::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

double htk_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double htk_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double triangle(double f, double lo, double mid, double hi) {
  if (f <= lo || f >= hi) return 0.0;
  if (f <= mid) return (f - lo) / (mid - lo);
  return (hi - f) / (hi - mid);
}

}  // namespace

Eigen::Matrix<double, 13, 1> naive_mfcc(const Eigen::VectorXd& samples, int sample_rate,
                                        int n_fft, int hop, int n_mels, double fmin,
                                        double fmax, double power_floor) {
  const long n = samples.size();
  const long pad = n_fft / 2;
  std::vector<double> padded(static_cast<std::size_t>(n + 2 * pad));
  for (long i = 0; i < n + 2 * pad; ++i) {
    long j = i - pad;
    if (j < 0) j = -j;
    if (j >= n) j = 2 * (n - 1) - j;
    padded[static_cast<std::size_t>(i)] = samples[j];
  }
  const long frames = 1 + n / hop;
  const int bins = n_fft / 2 + 1;

  std::vector<double> window(static_cast<std::size_t>(n_fft));
  for (int i = 0; i < n_fft; ++i) window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n_fft);

  const double mlo = htk_mel(fmin), mhi = htk_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = htk_hz(mlo + (mhi - mlo) * i / (n_mels + 1));
  }

  Eigen::Matrix<double, 13, 1> acc = Eigen::Matrix<double, 13, 1>::Zero();
  std::vector<double> power(static_cast<std::size_t>(bins));
  std::vector<double> logmel(static_cast<std::size_t>(n_mels));
  for (long t = 0; t < frames; ++t) {
    const double* frame = padded.data() + t * hop;
    for (int k = 0; k < bins; ++k) {
      std::complex<double> sum = 0.0;
      for (int i = 0; i < n_fft; ++i) {
        const double angle = -2.0 * kPi * static_cast<double>((static_cast<long>(k) * i) % n_fft) / n_fft;
        sum += frame[i] * window[static_cast<std::size_t>(i)] * std::polar(1.0, angle);
      }
      power[static_cast<std::size_t>(k)] = std::norm(sum);
    }
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * sample_rate / n_fft;
        e += triangle(f, edges[static_cast<std::size_t>(m)], edges[static_cast<std::size_t>(m + 1)],
                      edges[static_cast<std::size_t>(m + 2)]) *
             power[static_cast<std::size_t>(k)];
      }
      logmel[static_cast<std::size_t>(m)] = 10.0 * std::log10(std::max(e, power_floor));
    }
    for (int c = 0; c < 13; ++c) {
      double s = 0.0;
      for (int m = 0; m < n_mels; ++m) {
        s += logmel[static_cast<std::size_t>(m)] * std::cos(kPi * c * (m + 0.5) / n_mels);
      }
      acc[c] += s * std::sqrt((c == 0 ? 1.0 : 2.0) / n_mels);
    }
  }
  return acc / static_cast<double>(frames);
}

double pair_count_auc(const std::vector<double>& positives, const std::vector<double>& negatives) {
  double u = 0.0;
  for (double p : positives) {
    for (double q : negatives) {
      if (p > q) u += 1.0;
      else if (p == q) u += 0.5;
    }
  }
  return u / (static_cast<double>(positives.size()) * static_cast<double>(negatives.size()));
}

double pooled_pair_count_auc(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  std::vector<double> pos, neg;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      (labels[static_cast<std::size_t>(i)] == k ? pos : neg).push_back(probs(i, k));
    }
  }
  return pair_count_auc(pos, neg);
}

GradCheckResult finite_difference_check(const std::function<double()>& loss,
                                        std::vector<GradProbe>& probes, long samples_per_probe,
                                        Rng& rng, double eps, double floor,
                                        double kink_retry_above) {
  GradCheckResult result;
  for (auto& probe : probes) {
    const long size = probe.value->size();
    std::vector<long> idx(static_cast<std::size_t>(size));
    std::iota(idx.begin(), idx.end(), 0L);
    if (samples_per_probe > 0 && samples_per_probe < size) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(samples_per_probe));
    }
    for (long i : idx) {
      double& x = (*probe.value)[i];
      const double saved = x;
      const double analytic = probe.analytic[i];
      auto central = [&](double h, double* fwd, double* bwd) {
        x = saved + h;
        const double up = loss();
        x = saved - h;
        const double down = loss();
        x = saved;
        if (fwd) {
          const double mid = loss();
          *fwd = (up - mid) / h;
          *bwd = (mid - down) / h;
        }
        return (up - down) / (2.0 * h);
      };
      auto rel_error = [&](double numeric) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
        return std::abs(analytic - numeric) / denom;
      };
      double numeric = central(eps, nullptr, nullptr);
      double rel = rel_error(numeric);
      // A kink inside [x - h, x + h] shows up as one-sided slopes that disagree
      // by more than the analytic/numeric gap; shrink h and measure again.
      double h = eps;
      for (int retry = 0; retry < 3 && rel > kink_retry_above; ++retry) {
        double fwd = 0.0, bwd = 0.0;
        central(h, &fwd, &bwd);
        if (!(std::abs(fwd - bwd) > std::abs(analytic - numeric))) break;
        if (retry == 0) ++result.kinks;
        h /= 10.0;
        numeric = central(h, nullptr, nullptr);
        rel = rel_error(numeric);
      }
      ++result.checked;
      if (rel > result.max_rel_error || !std::isfinite(rel)) {
        result.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        result.worst = probe.name + "[" + std::to_string(i) + "] analytic " + fmt_g(analytic) +
                       " numeric " + fmt_g(numeric);
      }
    }
  }
  return result;
}

GradCheckResult check_layer(nn::Layer& layer, const nn::Tensor& input, const nn::Pass& pass,
                            Rng& rng, long samples_per_probe, double eps,
                            double kink_retry_above) {
  nn::Tensor x = input;
  const nn::Tensor y0 = layer.forward(x, pass);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  nn::Tensor w(y0.shape());
  for (long i = 0; i < w.size(); ++i) w[i] = unit(rng);

  const nn::Tensor dx = layer.backward(w);
  std::vector<GradProbe> probes;
  probes.push_back({"input", &x, dx});
  for (const auto& p : layer.params()) probes.push_back({p.name, p.value, *p.grad});

  auto loss = [&] { return layer.forward(x, pass).data().dot(w.data()); };
  return finite_difference_check(loss, probes, samples_per_probe, rng, eps, 1e-6,
                                 kink_retry_above);
}

}  // namespace coughnet::oracle

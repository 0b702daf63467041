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

#ifndef COUGHNET_ORACLES_HPP_
#define COUGHNET_ORACLES_HPP_

// Slow, independent reference implementations used to cross-check the
// production code paths. Nothing here shares code with the kernels it checks.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "coughnet/common.hpp"
#include "coughnet/nn/layers.hpp"

namespace coughnet::oracle {

/// MFCCs by direct DFT, explicit triangular weights and an O(n^2) DCT-II,
/// averaged over frames. Mirrors FeatureConfig semantics (centered frames,
/// reflect padding, periodic Hann, 10 log10 power with floor).
Eigen::Matrix<double, 13, 1> naive_mfcc(const Eigen::VectorXd& samples, int sample_rate,
                                        int n_fft, int hop, int n_mels, double fmin,
                                        double fmax, double power_floor);

/// Mann-Whitney U / (P N), ties counting one half.
double pair_count_auc(const std::vector<double>& positives, const std::vector<double>& negatives);

/// Pooled one-vs-all pair count over an [N, K] probability matrix.
double pooled_pair_count_auc(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

struct GradProbe {
  std::string name;
  nn::Tensor* value = nullptr;
  nn::Tensor analytic;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;
  long checked = 0;
  /// Entries whose first interval straddled a non-differentiable point.
  long kinks = 0;
};

/// Central differences of `loss` against the stored analytic gradients.
/// At most `samples_per_probe` entries per probe are checked (all when <= 0).
/// Relative error is |a - n| / max(|a|, |n|, floor). An entry whose error
/// exceeds kink_retry_above and whose one-sided slopes disagree by more than
/// the error itself (a ReLU or max switching inside the interval) is measured
/// again with eps / 10, at most three times.
GradCheckResult finite_difference_check(const std::function<double()>& loss,
                                        std::vector<GradProbe>& probes, long samples_per_probe,
                                        Rng& rng, double eps = 1e-5, double floor = 1e-6,
                                        double kink_retry_above = INFINITY);

/// Checks one layer under loss = sum(w * layer(x)) for a random w, covering
/// the input and every parameter.
GradCheckResult check_layer(nn::Layer& layer, const nn::Tensor& input, const nn::Pass& pass,
                            Rng& rng, long samples_per_probe = 0, double eps = 1e-5,
                            double kink_retry_above = INFINITY);

}  // namespace coughnet::oracle

#endif  // COUGHNET_ORACLES_HPP_

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

#ifndef COUGHNET_NN_LOSS_HPP_
#define COUGHNET_NN_LOSS_HPP_

#include <vector>

#include "coughnet/nn/tensor.hpp"

namespace coughnet::nn {

/// Row-wise, max-shifted.
Tensor softmax(const Tensor& logits);

struct LossResult {
  double loss = 0.0;
  /// d loss / d logits.
  Tensor grad;
  Tensor probabilities;
};

/// Mean cross-entropy of softmax(logits) against integer targets; the
/// gradient is (p - onehot) / N.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets);

/// Mean -log(max(p_target, 1e-12)) for given probabilities.
double cross_entropy(const Tensor& probabilities, const std::vector<int>& targets);

}  // namespace coughnet::nn

#endif  // COUGHNET_NN_LOSS_HPP_

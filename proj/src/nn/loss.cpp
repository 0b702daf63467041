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

#include "coughnet/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "coughnet/common.hpp"

namespace coughnet::nn {

namespace {

void check_targets(const Tensor& t, const std::vector<int>& targets) {
  if (t.rank() != 2) throw Error(ErrorKind::shape, "loss expects [N, K], got " + to_string(t.shape()));
  if (static_cast<Index>(targets.size()) != t.dim(0)) {
    throw Error(ErrorKind::shape, "loss has " + std::to_string(targets.size()) +
                                      " targets for " + to_string(t.shape()));
  }
  if (t.dim(0) == 0) throw Error(ErrorKind::empty_input, "loss over an empty batch");
  for (int y : targets) {
    if (y < 0 || y >= t.dim(1)) {
      throw Error(ErrorKind::parameter, "target " + std::to_string(y) + " out of range");
    }
  }
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) {
    throw Error(ErrorKind::shape, "softmax expects [N, K], got " + to_string(logits.shape()));
  }
  Tensor p(logits.shape());
  auto y = p.matrix();
  y = logits.matrix();
  y.colwise() -= y.rowwise().maxCoeff();
  y = y.array().exp().matrix();
  y.array().colwise() /= y.rowwise().sum().array();
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  check_targets(logits, targets);
  const Index n = logits.dim(0);
  LossResult r;
  const auto z = logits.matrix();
  const Eigen::VectorXd zmax = z.rowwise().maxCoeff();
  const Eigen::VectorXd lse =
      ((z.colwise() - zmax).array().exp().rowwise().sum().log().matrix() + zmax);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += lse[i] - z(i, targets[static_cast<std::size_t>(i)]);
  r.loss = total / static_cast<double>(n);
  r.probabilities = softmax(logits);
  r.grad = r.probabilities;
  auto g = r.grad.matrix();
  for (Index i = 0; i < n; ++i) g(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
  g /= static_cast<double>(n);
  return r;
}

double cross_entropy(const Tensor& probabilities, const std::vector<int>& targets) {
  check_targets(probabilities, targets);
  const auto p = probabilities.matrix();
  double total = 0.0;
  for (Index i = 0; i < p.rows(); ++i) {
    total -= std::log(std::max(p(i, targets[static_cast<std::size_t>(i)]), 1e-12));
  }
  return total / static_cast<double>(p.rows());
}

}  // namespace coughnet::nn

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

#ifndef COUGHNET_NN_OPTIM_HPP_
#define COUGHNET_NN_OPTIM_HPP_

#include <vector>

#include "coughnet/nn/layers.hpp"

namespace coughnet::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments, aligned with the parameter list they were
/// created for.
class Adam {
 public:
  Adam(std::vector<ParamRef> params, AdamConfig config);

  /// One bias-corrected update from the gradients currently held by the
  /// parameters.
  void step();

  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

 private:
  std::vector<ParamRef> params_;
  AdamConfig config_;
  std::vector<Eigen::VectorXd> m_, v_;
  long t_ = 0;
};

}  // namespace coughnet::nn

#endif  // COUGHNET_NN_OPTIM_HPP_

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

#include "coughnet/nn/optim.hpp"

#include <cmath>

namespace coughnet::nn {

Adam::Adam(std::vector<ParamRef> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorKind::parameter, "learning rate must be finite and non-negative");
  }
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw Error(ErrorKind::parameter, "adam betas must be in [0, 1)");
  }
  for (const auto& p : params_) {
    m_.push_back(Eigen::VectorXd::Zero(p.value->size()));
    v_.push_back(Eigen::VectorXd::Zero(p.value->size()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double lr = config_.learning_rate * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Eigen::VectorXd& g = params_[i].grad->data();
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
    params_[i].value->data().array() -=
        lr * m_[i].array() / (v_[i].array().sqrt() + config_.eps * std::sqrt(c2));
  }
}

}  // namespace coughnet::nn

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

#include "coughnet/nn/tensor.hpp"

#include "coughnet/common.hpp"

namespace coughnet::nn {

std::string to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 0) throw Error(ErrorKind::shape, "negative dimension in " + to_string(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(Eigen::VectorXd::Zero(shape_size(shape_))) {}

Tensor::Tensor(Shape shape, Eigen::VectorXd data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw Error(ErrorKind::shape, "tensor shape " + to_string(shape_) + " does not match " +
                                      std::to_string(data_.size()) + " elements");
  }
}

Tensor Tensor::constant(Shape shape, Scalar value) {
  const Index n = shape_size(shape);
  return Tensor(std::move(shape), Eigen::VectorXd::Constant(n, value));
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

}  // namespace coughnet::nn

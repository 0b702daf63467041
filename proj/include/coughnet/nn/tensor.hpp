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

#ifndef COUGHNET_NN_TENSOR_HPP_
#define COUGHNET_NN_TENSOR_HPP_

#include <Eigen/Dense>

#include <initializer_list>
#include <string>
#include <vector>

namespace coughnet::nn {

using Scalar = double;
using Eigen::Index;
using Shape = std::vector<Index>;
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::string to_string(const Shape& shape);
Index shape_size(const Shape& shape);

/// Dense row-major tensor of 64-bit reals.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, Eigen::VectorXd data);

  static Tensor constant(Shape shape, Scalar value);
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape()); }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_[static_cast<std::size_t>(i)]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Eigen::VectorXd& data() { return data_; }
  const Eigen::VectorXd& data() const { return data_; }
  Scalar* ptr() { return data_.data(); }
  const Scalar* ptr() const { return data_.data(); }
  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  /// Row-major view with dim(0) rows; requires rank >= 1.
  MatrixMap matrix() { return {data_.data(), shape_.at(0), size() / shape_.at(0)}; }
  ConstMatrixMap matrix() const {
    return {data_.data(), shape_.at(0), size() / shape_.at(0)};
  }

  /// Same data, new shape of equal element count.
  Tensor reshaped(Shape shape) const;
  bool all_finite() const { return data_.allFinite(); }

 private:
  Shape shape_;
  Eigen::VectorXd data_;
};

}  // namespace coughnet::nn

#endif  // COUGHNET_NN_TENSOR_HPP_

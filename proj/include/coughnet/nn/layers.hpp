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

#ifndef COUGHNET_NN_LAYERS_HPP_
#define COUGHNET_NN_LAYERS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "coughnet/common.hpp"
#include "coughnet/nn/tensor.hpp"

namespace coughnet::nn {

enum class Mode { train, infer };

enum class LayerKind {
  dense,
  conv2d,
  batchnorm,
  dropout,
  relu,
  gap,
  gmp,
  maxpool,
  residual_block,
  concat,
  softmax,
  standardize,
  sequential,
};

std::string_view to_string(LayerKind kind);

/// Per-call context. Dropout masks are a pure function of (layer seed, step,
/// element index), so repeating a step replays the same mask.
struct Pass {
  Mode mode = Mode::infer;
  std::uint64_t step = 0;
};

struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

/// Non-trainable persistent tensors (running statistics, input scaling).
struct StateRef {
  std::string name;
  Tensor* value = nullptr;
};

/// A differentiable node. backward() returns the gradient with respect to the
/// last forward input and overwrites the layer's parameter gradients.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Tensor forward(const Tensor& input, const Pass& pass) = 0;
  virtual Tensor backward(const Tensor& upstream) = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  virtual void collect_params(const std::string& /*prefix*/, std::vector<ParamRef>& /*out*/) {}
  virtual void collect_state(const std::string& /*prefix*/, std::vector<StateRef>& /*out*/) {}

  std::vector<ParamRef> params(const std::string& prefix = "");
  std::vector<StateRef> state(const std::string& prefix = "");
  Index parameter_count();

 protected:
  void require_forward(bool has_cache) const;
};

using LayerPtr = std::unique_ptr<Layer>;

class Dense final : public Layer {
 public:
  Dense(Index in_features, Index out_features, Rng& rng);

  LayerKind kind() const override { return LayerKind::dense; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<Dense>(*this); }
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  Index in_features() const { return weight_.dim(1); }
  Index out_features() const { return weight_.dim(0); }
  /// [out, in]
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  Tensor& weight_grad() { return weight_grad_; }

 private:
  Tensor weight_, bias_, weight_grad_, bias_grad_;
  Tensor input_;
  bool cached_ = false;
};

struct Conv2dOptions {
  Index kernel = 3;
  Index stride = 1;
  Index padding = 1;
  bool bias = false;
};

/// Cross-correlation over NCHW input; weight is [out, in, k, k].
class Conv2d final : public Layer {
 public:
  Conv2d(Index in_channels, Index out_channels, Conv2dOptions options, Rng& rng);

  LayerKind kind() const override { return LayerKind::conv2d; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<Conv2d>(*this); }
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  const Conv2dOptions& options() const { return options_; }

 private:
  Conv2dOptions options_;
  Index in_channels_, out_channels_;
  Tensor weight_, bias_, weight_grad_, bias_grad_;
  Shape input_shape_;
  RowMatrix columns_;
  Index out_h_ = 0, out_w_ = 0;
  bool cached_ = false;
};

/// Per-feature normalization over [N, F] or per-channel over [N, C, H, W].
/// Running estimates: r <- momentum * r + (1 - momentum) * batch, with the
/// biased batch variance.
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(Index features, double momentum = 0.9, double eps = 1e-5);

  LayerKind kind() const override { return LayerKind::batchnorm; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<BatchNorm>(*this); }
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }
  double momentum() const { return momentum_; }
  double eps() const { return eps_; }

 private:
  Index features_;
  double momentum_, eps_;
  Tensor gamma_, beta_, gamma_grad_, beta_grad_;
  Tensor running_mean_, running_var_;
  Tensor normalized_;
  Eigen::VectorXd inv_std_;
  Mode cached_mode_ = Mode::infer;
  bool cached_ = false;
};

/// Inverted dropout; identity in infer mode.
class Dropout final : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);

  LayerKind kind() const override { return LayerKind::dropout; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<Dropout>(*this); }

  double rate() const { return rate_; }

 private:
  double rate_;
  std::uint64_t seed_;
  Eigen::VectorXd mask_;
  bool identity_ = true;
  bool cached_ = false;
};

class Relu final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<Relu>(*this); }

 private:
  Eigen::VectorXd active_;
  bool cached_ = false;
};

/// [N, C, H, W] -> [N, C] spatial mean.
class GlobalAvgPool final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::gap; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

 private:
  Shape input_shape_;
  bool cached_ = false;
};

/// [N, C, H, W] -> [N, C] spatial max; ties route the gradient to the first
/// maximum.
class GlobalMaxPool final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::gmp; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<GlobalMaxPool>(*this); }

 private:
  Shape input_shape_;
  std::vector<Index> argmax_;
  bool cached_ = false;
};

class MaxPool2d final : public Layer {
 public:
  MaxPool2d(Index kernel, Index stride, Index padding);

  LayerKind kind() const override { return LayerKind::maxpool; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<MaxPool2d>(*this); }

 private:
  Index kernel_, stride_, padding_;
  Shape input_shape_;
  std::vector<Index> argmax_;
  bool cached_ = false;
};

/// Row-wise softmax over [N, K].
class Softmax final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::softmax; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<Softmax>(*this); }

 private:
  Tensor output_;
  bool cached_ = false;
};

/// Fixed affine input scaling (x - mean) / scale per feature; the statistics
/// are state, not trainable parameters.
class Standardize final : public Layer {
 public:
  explicit Standardize(Index features);

  LayerKind kind() const override { return LayerKind::standardize; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<Standardize>(*this); }
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

  /// Sets mean and scale from rows of a [N, F] sample; scale is floored at 1e-8.
  void fit(const Tensor& sample);
  Tensor& mean() { return mean_; }
  Tensor& scale() { return scale_; }

 private:
  Tensor mean_, scale_;
  bool cached_ = false;
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  Sequential& add(LayerPtr layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  LayerKind kind() const override { return LayerKind::sequential; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<Sequential>(*this); }
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

  std::size_t size() const { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }
  const Layer& at(std::size_t i) const { return *layers_.at(i); }

 private:
  std::vector<LayerPtr> layers_;
};

/// relu(main(x) + shortcut(x)); the shortcut is the identity when empty.
class ResidualBlock final : public Layer {
 public:
  ResidualBlock(Sequential main, Sequential shortcut);

  LayerKind kind() const override { return LayerKind::residual_block; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<ResidualBlock>(*this); }
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

 private:
  Sequential main_, shortcut_;
  Eigen::VectorXd active_;
  bool cached_ = false;
};

/// Feeds one input to every branch and concatenates the [N, w_i] outputs.
class ParallelConcat final : public Layer {
 public:
  explicit ParallelConcat(std::vector<Sequential> branches);

  LayerKind kind() const override { return LayerKind::concat; }
  Tensor forward(const Tensor& input, const Pass& pass) override;
  Tensor backward(const Tensor& upstream) override;
  LayerPtr clone() const override { return std::make_unique<ParallelConcat>(*this); }
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix, std::vector<StateRef>& out) override;

 private:
  std::vector<Sequential> branches_;
  std::vector<Index> widths_;
  bool cached_ = false;
};

/// Column-wise concatenation of [N, w_i] tensors.
Tensor concat_columns(const std::vector<const Tensor*>& parts);
/// Inverse of concat_columns for gradients.
std::vector<Tensor> split_columns(const Tensor& whole, const std::vector<Index>& widths);

}  // namespace coughnet::nn

#endif  // COUGHNET_NN_LAYERS_HPP_
